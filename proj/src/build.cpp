#include "mci/build.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>

#include "mci/parallel.hpp"

namespace mci {

void BuildParams::validate() const {
    if (!(alpha0 > 1.0)) throw InvalidArgument("alpha0 must be > 1");
    if (!(alpha_expansion > 1.0)) throw InvalidArgument("alpha expansion must be > 1");
    if (!(alpha_max >= alpha0)) throw InvalidArgument("alpha_max must be >= alpha0");
    if (tau < 2) throw InvalidArgument("tau must be >= 2");
    if (k_prime < 1) throw InvalidArgument("k' must be >= 1");
    if (k_prime + 1 < tau) throw InvalidArgument("k' must be >= tau - 1");
    if (!(supercenter_fraction > 0.0)) throw InvalidArgument("super-center fraction must be > 0");
}

CoverageMask::CoverageMask(std::size_t n)
    : n_(n), words_(std::make_unique<std::atomic<std::uint64_t>[]>((n + 63) / 64)) {
    for (std::size_t i = 0; i < (n + 63) / 64; ++i) words_[i].store(0, std::memory_order_relaxed);
}

std::size_t CoverageMask::count() const {
    std::size_t c = 0;
    for (std::size_t i = 0; i < (n_ + 63) / 64; ++i) {
        c += static_cast<std::size_t>(std::popcount(words_[i].load(std::memory_order_relaxed)));
    }
    return c;
}

CliqueCounts::CliqueCounts(std::size_t n) : counts_(std::make_unique<std::atomic<std::uint32_t>[]>(n)) {
    for (std::size_t i = 0; i < n; ++i) counts_[i].store(0, std::memory_order_relaxed);
}

// ---------------------------------------------------------------------------

LocalGraph::LocalGraph(std::vector<NodeId> ids)
    : ids_(std::move(ids)), words_((ids_.size() + 63) / 64), adj_(ids_.size() * words_, 0) {}

void LocalGraph::add_edge(std::size_t a, std::size_t b) {
    if (a == b) return;
    adj_[a * words_ + (b >> 6)] |= 1ULL << (b & 63);
    adj_[b * words_ + (a >> 6)] |= 1ULL << (a & 63);
}

std::vector<std::size_t> greedy_maximal_clique(const LocalGraph& g, std::size_t seed) {
    const std::size_t words = g.words();
    std::vector<std::size_t> clique{seed};
    std::vector<std::uint64_t> cand(g.row(seed).begin(), g.row(seed).end());

    for (;;) {
        std::size_t best = g.size();
        int best_degree = -1;
        for (std::size_t w = 0; w < words; ++w) {
            std::uint64_t bits = cand[w];
            while (bits != 0) {
                const std::size_t c = w * 64 + static_cast<std::size_t>(std::countr_zero(bits));
                bits &= bits - 1;
                const auto row = g.row(c);
                int degree = 0;
                for (std::size_t x = 0; x < words; ++x) degree += std::popcount(row[x] & cand[x]);
                // Ascending scan, strict comparison: ties keep the smaller index.
                if (degree > best_degree) {
                    best_degree = degree;
                    best = c;
                }
            }
        }
        if (best == g.size()) break;
        clique.push_back(best);
        const auto row = g.row(best);
        for (std::size_t x = 0; x < words; ++x) cand[x] &= row[x];
    }
    std::sort(clique.begin(), clique.end());
    return clique;
}

// ---------------------------------------------------------------------------

std::vector<Clique> mine_local(NodeId center, std::span<const NodeId> candidates, double alpha,
                               const Dataset& dataset, const BuildParams& params,
                               CoverageMask& covered) {
    std::vector<NodeId> ids(candidates.begin(), candidates.end());
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    const auto center_it = std::lower_bound(ids.begin(), ids.end(), center);
    if (center_it == ids.end() || *center_it != center) {
        throw InvalidArgument("mine_local: candidate set must contain the center");
    }
    const std::size_t m = ids.size();
    const std::size_t dim = dataset.dim();
    const auto center_local = static_cast<std::size_t>(center_it - ids.begin());

    std::vector<float> sq(m * m, 0.0F);
    for (std::size_t a = 0; a < m; ++a) {
        for (std::size_t b = a + 1; b < m; ++b) {
            const float d = l2sq(dataset.row_ptr(ids[a]), dataset.row_ptr(ids[b]), dim);
            sq[a * m + b] = d;
            sq[b * m + a] = d;
        }
    }
    float min_sq = std::numeric_limits<float>::infinity();
    for (std::size_t b = 0; b < m; ++b) {
        if (b != center_local) min_sq = std::min(min_sq, sq[center_local * m + b]);
    }
    const double d_min = m > 1 ? std::sqrt(static_cast<double>(min_sq)) : 0.0;
    const double threshold = alpha * d_min;

    LocalGraph g(ids);
    for (std::size_t a = 0; a < m; ++a) {
        for (std::size_t b = a + 1; b < m; ++b) {
            if (std::sqrt(static_cast<double>(sq[a * m + b])) <= threshold) g.add_edge(a, b);
        }
    }

    std::vector<Clique> out;
    for (std::size_t j = 0; j < m; ++j) {
        if (covered.test(ids[j])) continue;
        const auto local = greedy_maximal_clique(g, j);
        if (local.size() < params.tau) continue;
        Clique c;
        c.kind = CliqueKind::mined;
        c.threshold = threshold;
        c.center = center;
        c.members.reserve(local.size());
        for (std::size_t x : local) {
            c.members.push_back(ids[x]);
            covered.set(ids[x]);
        }
        out.push_back(std::move(c));
    }

    if (alpha >= params.alpha_max && !covered.test(center)) {
        Clique c;
        c.kind = CliqueKind::pseudo;
        c.threshold = std::numeric_limits<double>::infinity();
        c.center = center;
        c.members = ids;
        for (NodeId u : ids) covered.set(u);
        out.push_back(std::move(c));
    }
    return out;
}

MineResult mine_cliques(NodeId center, double alpha, CoverageMask& covered, const Dataset& dataset,
                        const KnnGraph& knng, const BuildParams& params, CliqueCounts& counts) {
    if (alpha < params.alpha0) throw InvalidArgument("mine_cliques: alpha below alpha0");
    const double cap = std::max(1.0, params.supercenter_fraction * static_cast<double>(dataset.size()));

    MineResult result;
    std::vector<NodeId> local;
    local.reserve(knng.k_prime() + 1);
    local.push_back(center);
    for (const Neighbor& nb : knng.neighbors(center)) {
        if (static_cast<double>(counts.get(nb.id)) > cap) {
            ++result.supercenter_exclusions;
            continue;
        }
        local.push_back(nb.id);
    }
    result.cliques = mine_local(center, local, alpha, dataset, params, covered);
    for (const Clique& c : result.cliques) {
        for (NodeId u : c.members) counts.bump(u);
    }
    return result;
}

std::size_t max_rounds(const BuildParams& params) {
    const double steps = std::log(params.alpha_max / params.alpha0) / std::log(params.alpha_expansion);
    return static_cast<std::size_t>(std::ceil(std::max(0.0, steps) - 1e-12)) + 2;
}

CliqueIndex build(const Dataset& dataset, const KnnGraph& knng, const BuildParams& params,
                  unsigned threads) {
    params.validate();
    const std::size_t n = dataset.size();
    if (knng.size() != n) {
        throw InvalidArgument("k'-NN graph has " + std::to_string(knng.size()) + " nodes, dataset has " +
                              std::to_string(n));
    }
    const std::size_t expected_k = std::min<std::size_t>(params.k_prime, n - 1);
    if (knng.k_prime() != expected_k) {
        throw InvalidArgument("k'-NN graph has k'=" + std::to_string(knng.k_prime()) + ", build expects " +
                              std::to_string(expected_k));
    }

    CliqueIndex index(n, static_cast<std::uint32_t>(knng.k_prime()), params.tau);
    BuildMeta& meta = index.meta();
    if (params.tau > knng.k_prime() + 1) {
        meta.warnings.push_back("tau=" + std::to_string(params.tau) + " exceeds k'+1=" +
                                std::to_string(knng.k_prime() + 1) + "; pseudo-cliques will dominate");
    }

    const unsigned workers = resolve_threads(threads);
    CoverageMask covered(n);
    CliqueCounts counts(n);
    struct WorkerPool {
        std::vector<Clique> cliques;
        std::size_t processed = 0;
        std::size_t pseudo = 0;
        std::size_t exclusions = 0;
    };
    std::vector<WorkerPool> pools(workers);
    std::vector<std::size_t> round_start(workers, 0);

    const std::size_t round_limit = max_rounds(params);
    double alpha = params.alpha0;
    std::vector<NodeId> pending;
    while (covered.count() < n) {
        if (meta.rounds.size() >= round_limit) {
            throw Error("build exceeded its round bound of " + std::to_string(round_limit));
        }
        pending.clear();
        for (std::size_t u = 0; u < n; ++u) {
            if (!covered.test(static_cast<NodeId>(u))) pending.push_back(static_cast<NodeId>(u));
        }
        for (unsigned w = 0; w < workers; ++w) {
            round_start[w] = pools[w].cliques.size();
            pools[w].processed = 0;
            pools[w].pseudo = 0;
        }
        parallel_for(0, pending.size(), workers, [&](std::size_t i, unsigned w) {
            const NodeId u = pending[i];
            if (covered.test(u)) return;
            auto res = mine_cliques(u, alpha, covered, dataset, knng, params, counts);
            auto& pool = pools[w];
            ++pool.processed;
            pool.exclusions += res.supercenter_exclusions;
            for (auto& c : res.cliques) {
                if (c.kind == CliqueKind::pseudo) ++pool.pseudo;
                pool.cliques.push_back(std::move(c));
            }
        }, 16);

        BuildRound round;
        round.alpha = alpha;
        for (unsigned w = 0; w < workers; ++w) {
            round.processed += pools[w].processed;
            round.cliques_added += pools[w].cliques.size() - round_start[w];
            round.pseudo_added += pools[w].pseudo;
        }
        round.uncovered_after = n - covered.count();
        meta.rounds.push_back(round);
        alpha *= params.alpha_expansion;
    }

    for (auto& pool : pools) {
        meta.supercenter_exclusions += pool.exclusions;
        for (const auto& c : pool.cliques) {
            if (c.kind == CliqueKind::pseudo) ++meta.pseudo_cliques;
            index.add_clique(c);
        }
        pool.cliques.clear();
    }
    index.compact();
    return index;
}

double effective_out_degree(const CliqueIndex& index) {
    const std::size_t n = index.size();
    if (index.live_count() == 0) return 0.0;
    std::vector<NodeId> stamp(n, std::numeric_limits<NodeId>::max());
    std::size_t total = 0;
    for (std::size_t u = 0; u < n; ++u) {
        const auto uid = static_cast<NodeId>(u);
        if (!index.live(uid)) continue;
        stamp[u] = uid;
        for (std::uint32_t c : index.cliques_of(uid)) {
            for (NodeId v : index.members(c)) {
                if (stamp[v] != uid) {
                    stamp[v] = uid;
                    ++total;
                }
            }
        }
    }
    return static_cast<double>(total) / static_cast<double>(index.live_count());
}

std::vector<CoveragePoint> coverage_curve(const BuildMeta& meta, std::size_t n) {
    std::vector<CoveragePoint> out;
    out.reserve(meta.rounds.size());
    for (const auto& r : meta.rounds) {
        out.push_back({r.alpha, n == 0 ? 0.0 : static_cast<double>(r.uncovered_after) / static_cast<double>(n)});
    }
    return out;
}

}  // namespace mci
