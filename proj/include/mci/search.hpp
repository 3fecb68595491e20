#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "mci/core.hpp"
#include "mci/index.hpp"
#include "mci/knng.hpp"

namespace mci {

enum class SeedMode : std::uint8_t {
    /// Reservoir-sample the set bits of a precomputed predicate mask.
    reservoir,
    /// No mask: draw random ids without replacement, testing the predicate
    /// lazily until enough valid seeds are found.
    rejection,
};

struct SearchParams {
    std::uint32_t k = 10;
    std::uint32_t l_s = 10;
    double epsilon = 1.0;
    std::uint64_t rng_seed = 0;
    SeedMode seed_mode = SeedMode::reservoir;

    void validate() const;
};

struct SearchStats {
    std::uint64_t distance_computations = 0;
    std::uint64_t expanded = 0;
    std::uint64_t seeds = 0;
    std::uint64_t cliques_visited = 0;
};

/// Candidate beam R with expanded flags, the visited set I, and the visited
/// clique set of one query.
class SearchState {
public:
    struct Entry {
        NodeId id;
        float distance;
        bool expanded;
    };

    SearchState(std::size_t n, std::size_t clique_count, std::size_t capacity);

    /// Inserts in sorted position (distance, then id); drops the farthest entry
    /// once the beam exceeds capacity.
    void insert(NodeId id, float distance);

    /// Closest unexpanded entry, marked expanded; false when none remain.
    bool pop_unexpanded(NodeId& out);

    std::span<const Entry> beam() const { return beam_; }
    std::size_t capacity() const { return capacity_; }

    bool visited(NodeId u) const { return (visited_[u >> 6] >> (u & 63)) & 1ULL; }
    void mark_visited(NodeId u) { visited_[u >> 6] |= 1ULL << (u & 63); }
    std::size_t visited_count() const;

    /// Returns true the first time a clique is seen.
    bool visit_clique(std::uint32_t c);

    SearchStats stats;

private:
    std::vector<Entry> beam_;
    std::size_t capacity_;
    std::size_t cursor_ = 0;  // every entry before cursor_ is expanded
    std::vector<std::uint64_t> visited_;
    std::vector<std::uint64_t> visited_cliques_;
};

/// ceil(epsilon * sqrt(n)) distinct set bits of `mask`, uniform over them.
std::vector<NodeId> sample_seeds(const PredicateMask& mask, double epsilon, std::size_t n,
                                 std::mt19937_64& rng);

/// Filtered top-k over the index with a precomputed predicate mask. Deleted
/// nodes are never returned.
std::vector<Neighbor> search(const CliqueIndex& index, const Dataset& dataset, std::span<const float> query,
                             const PredicateMask& mask, const SearchParams& params,
                             SearchStats* stats = nullptr);

/// Evaluates the mask (reservoir mode) or tests the predicate on demand
/// (rejection mode), then searches.
std::vector<Neighbor> search(const CliqueIndex& index, const Dataset& dataset, const Query& query,
                             const SearchParams& params, SearchStats* stats = nullptr);

/// Live-node mask of an index.
PredicateMask live_mask(const CliqueIndex& index);

}  // namespace mci
