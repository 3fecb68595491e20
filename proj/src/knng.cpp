#include "mci/knng.hpp"

#include <algorithm>
#include <mutex>
#include <numeric>
#include <random>

#include "mci/parallel.hpp"

namespace mci {

KnnGraph::KnnGraph(std::size_t n, std::size_t k_prime) : n_(n), k_(k_prime), rows_(n * k_prime) {}

namespace {

std::size_t clamp_k(const Dataset& dataset, std::size_t k_prime, std::vector<std::string>& warnings) {
    if (k_prime == 0) throw InvalidArgument("k' must be >= 1");
    const std::size_t n = dataset.size();
    if (k_prime >= n) {
        warnings.push_back("k'=" + std::to_string(k_prime) + " >= n=" + std::to_string(n) +
                           "; clamped to " + std::to_string(n - 1));
        return n - 1;
    }
    return k_prime;
}

}  // namespace

KnnGraph exact_knn(const Dataset& dataset, std::size_t k_prime, unsigned threads) {
    std::vector<std::string> warnings;
    const std::size_t k = clamp_k(dataset, k_prime, warnings);
    const std::size_t n = dataset.size();
    const std::size_t dim = dataset.dim();
    KnnGraph graph(n, k);
    graph.warnings = std::move(warnings);
    if (k == 0) return graph;

    const unsigned workers = resolve_threads(threads);
    std::vector<std::vector<Neighbor>> scratch(workers, std::vector<Neighbor>(n - 1));
    parallel_for(0, n, workers, [&](std::size_t u, unsigned w) {
        auto& buf = scratch[w];
        const float* q = dataset.row_ptr(static_cast<NodeId>(u));
        std::size_t m = 0;
        for (std::size_t v = 0; v < n; ++v) {
            if (v == u) continue;
            buf[m++] = {static_cast<NodeId>(v), l2sq(q, dataset.row_ptr(static_cast<NodeId>(v)), dim)};
        }
        std::partial_sort(buf.begin(), buf.begin() + static_cast<std::ptrdiff_t>(k), buf.end(), closer);
        std::copy_n(buf.begin(), k, graph.neighbors(static_cast<NodeId>(u)).begin());
    }, 16);
    return graph;
}

// ---------------------------------------------------------------------------
// NN-Descent
// ---------------------------------------------------------------------------

namespace {

struct PoolEntry {
    NodeId id;
    float distance;
    bool is_new;
};

/// Sorted, fixed-capacity candidate list of one node.
struct NeighborPool {
    std::vector<PoolEntry> items;

    float worst() const { return items.back().distance; }

    /// Returns true if the list changed.
    bool offer(NodeId id, float dist) {
        const PoolEntry& back = items.back();
        if (dist > back.distance || (dist == back.distance && id >= back.id)) return false;
        for (const auto& e : items) {
            if (e.id == id) return false;
        }
        auto pos = std::find_if(items.begin(), items.end(), [&](const PoolEntry& e) {
            return dist < e.distance || (dist == e.distance && id < e.id);
        });
        items.insert(pos, PoolEntry{id, dist, true});
        items.pop_back();
        return true;
    }
};

template <class Rng>
void sample_in_place(std::vector<NodeId>& v, std::size_t keep, Rng& rng) {
    if (v.size() <= keep) return;
    // Partial Fisher-Yates: the first `keep` slots become a uniform sample.
    for (std::size_t i = 0; i < keep; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, v.size() - 1);
        std::swap(v[i], v[pick(rng)]);
    }
    v.resize(keep);
}

}  // namespace

KnnGraph nn_descent(const Dataset& dataset, std::size_t k_prime, const NnDescentParams& params,
                    unsigned threads) {
    if (params.iterations < 1) throw InvalidArgument("nn_descent requires iterations >= 1");
    if (!(params.sample_rate > 0.0 && params.sample_rate <= 1.0)) {
        throw InvalidArgument("nn_descent requires 0 < sample_rate <= 1");
    }
    std::vector<std::string> warnings;
    const std::size_t k = clamp_k(dataset, k_prime, warnings);
    const std::size_t n = dataset.size();
    const std::size_t dim = dataset.dim();
    KnnGraph graph(n, k);
    graph.warnings = std::move(warnings);
    if (k == 0) return graph;

    std::mt19937_64 rng(params.seed);
    auto dist = [&](NodeId a, NodeId b) { return l2sq(dataset.row_ptr(a), dataset.row_ptr(b), dim); };

    std::vector<NeighborPool> pools(n);
    {
        std::vector<NodeId> ids(n);
        std::iota(ids.begin(), ids.end(), NodeId{0});
        for (std::size_t u = 0; u < n; ++u) {
            // k distinct random ids excluding u: sample from [0, n-1) and shift.
            std::vector<NodeId> pick;
            std::vector<std::size_t> swaps;
            pick.reserve(k);
            swaps.reserve(k);
            for (std::size_t i = 0; i < k; ++i) {
                std::uniform_int_distribution<std::size_t> d(i, n - 2);
                const std::size_t j = d(rng);
                std::swap(ids[i], ids[j]);
                swaps.push_back(j);
                pick.push_back(ids[i] >= u ? ids[i] + 1 : ids[i]);
            }
            for (std::size_t i = k; i-- > 0;) std::swap(ids[i], ids[swaps[i]]);
            auto& items = pools[u].items;
            items.reserve(k + 1);
            for (NodeId v : pick) items.push_back({v, dist(static_cast<NodeId>(u), v), true});
            std::sort(items.begin(), items.end(), [](const PoolEntry& a, const PoolEntry& b) {
                return closer({a.id, a.distance}, {b.id, b.distance});
            });
        }
    }

    const std::size_t sample = std::max<std::size_t>(1, static_cast<std::size_t>(params.sample_rate * static_cast<double>(k)));
    const unsigned workers = resolve_threads(threads);
    std::vector<std::mutex> locks(workers > 1 ? n : 0);

    std::vector<std::vector<NodeId>> new_lists(n);
    std::vector<std::vector<NodeId>> old_lists(n);
    std::vector<std::vector<NodeId>> new_rev(n);
    std::vector<std::vector<NodeId>> old_rev(n);

    for (std::size_t iter = 0; iter < params.iterations; ++iter) {
        for (std::size_t u = 0; u < n; ++u) {
            new_lists[u].clear();
            old_lists[u].clear();
            new_rev[u].clear();
            old_rev[u].clear();
        }
        for (std::size_t u = 0; u < n; ++u) {
            std::vector<std::size_t> fresh;
            for (std::size_t i = 0; i < k; ++i) {
                auto& e = pools[u].items[i];
                if (e.is_new) {
                    fresh.push_back(i);
                } else {
                    old_lists[u].push_back(e.id);
                }
            }
            if (fresh.size() > sample) {
                for (std::size_t i = 0; i < sample; ++i) {
                    std::uniform_int_distribution<std::size_t> d(i, fresh.size() - 1);
                    std::swap(fresh[i], fresh[d(rng)]);
                }
                fresh.resize(sample);
            }
            for (std::size_t i : fresh) {
                auto& e = pools[u].items[i];
                e.is_new = false;
                new_lists[u].push_back(e.id);
            }
        }
        for (std::size_t u = 0; u < n; ++u) {
            for (NodeId v : new_lists[u]) new_rev[v].push_back(static_cast<NodeId>(u));
            for (NodeId v : old_lists[u]) old_rev[v].push_back(static_cast<NodeId>(u));
        }
        for (std::size_t u = 0; u < n; ++u) {
            sample_in_place(new_rev[u], sample, rng);
            sample_in_place(old_rev[u], sample, rng);
            auto merge = [](std::vector<NodeId>& dst, const std::vector<NodeId>& src) {
                dst.insert(dst.end(), src.begin(), src.end());
                std::sort(dst.begin(), dst.end());
                dst.erase(std::unique(dst.begin(), dst.end()), dst.end());
            };
            merge(new_lists[u], new_rev[u]);
            merge(old_lists[u], old_rev[u]);
            // The center joins too, so tiny graphs see every pair in one pass.
            new_lists[u].push_back(static_cast<NodeId>(u));
        }

        std::atomic<std::size_t> updates{0};
        auto offer = [&](NodeId a, NodeId b, float d) {
            if (workers > 1) {
                std::size_t c = 0;
                {
                    std::lock_guard lock(locks[a]);
                    c += pools[a].offer(b, d) ? 1 : 0;
                }
                {
                    std::lock_guard lock(locks[b]);
                    c += pools[b].offer(a, d) ? 1 : 0;
                }
                if (c) updates.fetch_add(c, std::memory_order_relaxed);
            } else {
                std::size_t c = (pools[a].offer(b, d) ? 1 : 0) + (pools[b].offer(a, d) ? 1 : 0);
                if (c) updates.fetch_add(c, std::memory_order_relaxed);
            }
        };
        parallel_for(0, n, workers, [&](std::size_t u, unsigned) {
            const auto& fresh = new_lists[u];
            const auto& stale = old_lists[u];
            for (std::size_t i = 0; i < fresh.size(); ++i) {
                const NodeId a = fresh[i];
                for (std::size_t j = i + 1; j < fresh.size(); ++j) {
                    const NodeId b = fresh[j];
                    if (a == b) continue;
                    offer(a, b, dist(a, b));
                }
                for (NodeId b : stale) {
                    if (a == b) continue;
                    offer(a, b, dist(a, b));
                }
            }
        }, 32);

        if (static_cast<double>(updates.load()) < params.delta * static_cast<double>(n * k)) break;
    }

    for (std::size_t u = 0; u < n; ++u) {
        auto row = graph.neighbors(static_cast<NodeId>(u));
        for (std::size_t i = 0; i < k; ++i) row[i] = {pools[u].items[i].id, pools[u].items[i].distance};
    }
    return graph;
}

KnnGraph build_knng(const Dataset& dataset, std::size_t k_prime, unsigned threads,
                    const NnDescentParams& params, std::size_t exact_limit) {
    if (dataset.size() <= exact_limit) return exact_knn(dataset, k_prime, threads);
    return nn_descent(dataset, k_prime, params, threads);
}

double graph_recall(const KnnGraph& approx, const KnnGraph& exact) {
    if (approx.size() != exact.size() || approx.k_prime() != exact.k_prime()) {
        throw DimensionError("graph_recall: graphs differ in shape (n=" + std::to_string(approx.size()) +
                             " vs " + std::to_string(exact.size()) + ", k'=" +
                             std::to_string(approx.k_prime()) + " vs " + std::to_string(exact.k_prime()) + ")");
    }
    const std::size_t n = exact.size();
    const std::size_t k = exact.k_prime();
    if (n == 0 || k == 0) return 1.0;
    double total = 0.0;
    std::vector<NodeId> a;
    std::vector<NodeId> b;
    for (std::size_t u = 0; u < n; ++u) {
        a.clear();
        b.clear();
        for (const auto& nb : approx.neighbors(static_cast<NodeId>(u))) a.push_back(nb.id);
        for (const auto& nb : exact.neighbors(static_cast<NodeId>(u))) b.push_back(nb.id);
        std::sort(a.begin(), a.end());
        std::sort(b.begin(), b.end());
        std::vector<NodeId> common;
        std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(common));
        total += static_cast<double>(common.size()) / static_cast<double>(k);
    }
    return total / static_cast<double>(n);
}

}  // namespace mci
