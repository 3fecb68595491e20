#include "mci/search.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

namespace mci {

void SearchParams::validate() const {
    if (k < 1) throw InvalidArgument("k must be >= 1");
    if (l_s < k) throw InvalidArgument("beam width l_s must be >= k");
    if (!(epsilon >= 0.0)) throw InvalidArgument("epsilon must be >= 0");
}

SearchState::SearchState(std::size_t n, std::size_t clique_count, std::size_t capacity)
    : capacity_(capacity), visited_((n + 63) / 64, 0), visited_cliques_((clique_count + 63) / 64, 0) {
    beam_.reserve(capacity + 1);
}

void SearchState::insert(NodeId id, float distance) {
    if (beam_.size() == capacity_) {
        const Entry& worst = beam_.back();
        if (distance > worst.distance || (distance == worst.distance && id > worst.id)) return;
    }
    auto pos = std::lower_bound(beam_.begin(), beam_.end(), Entry{id, distance, false},
                                [](const Entry& a, const Entry& b) {
                                    return a.distance < b.distance || (a.distance == b.distance && a.id < b.id);
                                });
    const auto at = static_cast<std::size_t>(pos - beam_.begin());
    beam_.insert(pos, Entry{id, distance, false});
    if (beam_.size() > capacity_) beam_.pop_back();
    if (at < cursor_) cursor_ = at;
}

bool SearchState::pop_unexpanded(NodeId& out) {
    while (cursor_ < beam_.size() && beam_[cursor_].expanded) ++cursor_;
    if (cursor_ >= beam_.size()) return false;
    beam_[cursor_].expanded = true;
    out = beam_[cursor_].id;
    ++stats.expanded;
    return true;
}

std::size_t SearchState::visited_count() const {
    std::size_t c = 0;
    for (auto w : visited_) c += static_cast<std::size_t>(std::popcount(w));
    return c;
}

bool SearchState::visit_clique(std::uint32_t c) {
    std::uint64_t& w = visited_cliques_[c >> 6];
    const std::uint64_t bit = 1ULL << (c & 63);
    if (w & bit) return false;
    w |= bit;
    ++stats.cliques_visited;
    return true;
}

namespace {

// ceil(epsilon * sqrt(n)), ignoring rounding noise just above an integer.
std::size_t seed_count(double epsilon, std::size_t n) {
    const double x = epsilon * std::sqrt(static_cast<double>(n));
    return static_cast<std::size_t>(std::ceil(x * (1.0 - 1e-12)));
}

}  // namespace

std::vector<NodeId> sample_seeds(const PredicateMask& mask, double epsilon, std::size_t n,
                                 std::mt19937_64& rng) {
    const std::size_t want = seed_count(epsilon, n);
    std::vector<NodeId> reservoir;
    if (want == 0) return reservoir;
    reservoir.reserve(std::min(want, mask.true_count()));
    std::size_t seen = 0;
    mask.for_each_set([&](NodeId u) {
        if (seen < want) {
            reservoir.push_back(u);
        } else {
            std::uniform_int_distribution<std::size_t> pick(0, seen);
            const std::size_t j = pick(rng);
            if (j < want) reservoir[j] = u;
        }
        ++seen;
    });
    return reservoir;
}

namespace {

/// Beam search core; `valid(u)` decides predicate truth for node u.
template <class Valid>
std::vector<Neighbor> beam_search(const CliqueIndex& index, const Dataset& dataset, std::span<const float> query,
                                  const std::vector<NodeId>& seeds, const SearchParams& params, Valid&& valid,
                                  SearchStats* stats) {
    const std::size_t dim = dataset.dim();
    SearchState state(index.size(), index.clique_count(), params.l_s);
    state.stats.seeds = seeds.size();
    for (NodeId s : seeds) {
        if (state.visited(s)) continue;
        state.mark_visited(s);
        ++state.stats.distance_computations;
        state.insert(s, l2sq(query.data(), dataset.row_ptr(s), dim));
    }
    NodeId p = 0;
    while (state.pop_unexpanded(p)) {
        for (std::uint32_t c : index.cliques_of(p)) {
            if (!state.visit_clique(c)) continue;
            for (NodeId v : index.members(c)) {
                if (state.visited(v) || !valid(v)) continue;
                state.mark_visited(v);
                ++state.stats.distance_computations;
                state.insert(v, l2sq(query.data(), dataset.row_ptr(v), dim));
            }
        }
    }
    std::vector<Neighbor> out;
    const auto beam = state.beam();
    const std::size_t k = std::min<std::size_t>(params.k, beam.size());
    out.reserve(k);
    for (std::size_t i = 0; i < k; ++i) out.push_back({beam[i].id, beam[i].distance});
    if (stats != nullptr) *stats = state.stats;
    return out;
}

}  // namespace

PredicateMask live_mask(const CliqueIndex& index) {
    PredicateMask m(index.size());
    for (std::size_t u = 0; u < index.size(); ++u) {
        if (index.live(static_cast<NodeId>(u))) m.set(u, true);
    }
    return m;
}

std::vector<Neighbor> search(const CliqueIndex& index, const Dataset& dataset, std::span<const float> query,
                             const PredicateMask& mask, const SearchParams& params, SearchStats* stats) {
    params.validate();
    if (query.size() != dataset.dim()) {
        throw DimensionError("query has dim " + std::to_string(query.size()) + ", dataset dim is " +
                             std::to_string(dataset.dim()));
    }
    if (index.size() != dataset.size() || mask.size() != dataset.size()) {
        throw DimensionError("index, dataset and mask must cover the same nodes");
    }
    const PredicateMask* effective = &mask;
    PredicateMask combined;
    if (index.live_count() != index.size()) {
        combined = mask;
        combined &= live_mask(index);
        effective = &combined;
    }
    std::mt19937_64 rng(params.rng_seed);
    const auto seeds = sample_seeds(*effective, params.epsilon, index.size(), rng);
    return beam_search(index, dataset, query, seeds, params,
                       [effective](NodeId v) { return effective->test(v); }, stats);
}

std::vector<Neighbor> search(const CliqueIndex& index, const Dataset& dataset, const Query& query,
                             const SearchParams& params, SearchStats* stats) {
    if (params.seed_mode == SeedMode::reservoir) {
        return search(index, dataset, query.vector, evaluate_mask(dataset, query.predicate), params, stats);
    }
    params.validate();
    if (query.vector.size() != dataset.dim()) {
        throw DimensionError("query has dim " + std::to_string(query.vector.size()) + ", dataset dim is " +
                             std::to_string(dataset.dim()));
    }
    const std::size_t n = index.size();
    // Memoized predicate: 0 unknown, 1 false, 2 true.
    std::vector<std::uint8_t> memo(n, 0);
    auto valid = [&](NodeId v) {
        if (memo[v] == 0) {
            const bool ok = index.live(v) && query.predicate.test(v, dataset.feature(v));
            memo[v] = ok ? 2 : 1;
        }
        return memo[v] == 2;
    };
    const std::size_t want = seed_count(params.epsilon, n);
    std::vector<NodeId> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = static_cast<NodeId>(i);
    std::mt19937_64 rng(params.rng_seed);
    std::vector<NodeId> seeds;
    for (std::size_t i = 0; i < n && seeds.size() < want; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, n - 1);
        std::swap(order[i], order[pick(rng)]);
        if (valid(order[i])) seeds.push_back(order[i]);
    }
    return beam_search(index, dataset, query.vector, seeds, params, valid, stats);
}

}  // namespace mci
