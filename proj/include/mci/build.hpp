#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "mci/core.hpp"
#include "mci/index.hpp"
#include "mci/knng.hpp"

namespace mci {

struct BuildParams {
    std::uint32_t k_prime = 200;
    std::uint32_t tau = 50;
    double alpha0 = 1.2;
    double alpha_expansion = 2.0;
    double alpha_max = 10.0;
    /// Nodes already in more than max(1, fraction * n) cliques are left out
    /// of later local candidate sets.
    double supercenter_fraction = 0.01;

    /// Throws InvalidArgument on out-of-range values.
    void validate() const;
};

/// Shared bit array of covered nodes, updated with atomic fetch_or.
class CoverageMask {
public:
    explicit CoverageMask(std::size_t n);

    std::size_t size() const { return n_; }
    bool test(NodeId u) const {
        return (words_[u >> 6].load(std::memory_order_relaxed) >> (u & 63)) & 1ULL;
    }
    /// Returns true if the bit was newly set.
    bool set(NodeId u) {
        const std::uint64_t bit = 1ULL << (u & 63);
        return (words_[u >> 6].fetch_or(bit, std::memory_order_relaxed) & bit) == 0;
    }
    std::size_t count() const;

private:
    std::size_t n_;
    std::unique_ptr<std::atomic<std::uint64_t>[]> words_;
};

/// Undirected graph over a handful of local nodes, stored as adjacency bitsets.
class LocalGraph {
public:
    LocalGraph() = default;
    /// `ids` label the local nodes (ascending global ids by convention).
    explicit LocalGraph(std::vector<NodeId> ids);

    std::size_t size() const { return ids_.size(); }
    NodeId id(std::size_t local) const { return ids_[local]; }
    std::span<const NodeId> ids() const { return ids_; }

    void add_edge(std::size_t a, std::size_t b);
    bool adjacent(std::size_t a, std::size_t b) const {
        return (adj_[a * words_ + (b >> 6)] >> (b & 63)) & 1ULL;
    }
    std::span<const std::uint64_t> row(std::size_t a) const { return {adj_.data() + a * words_, words_}; }
    std::size_t words() const { return words_; }

private:
    std::vector<NodeId> ids_;
    std::size_t words_ = 0;
    std::vector<std::uint64_t> adj_;
};

/// Greedy maximal clique through `seed` (a local index): repeatedly absorbs the
/// candidate with most neighbors inside the candidate set, ties to the smaller
/// local index. Returns local indices in ascending order.
std::vector<std::size_t> greedy_maximal_clique(const LocalGraph& g, std::size_t seed);

/// Per-node live clique counts used for super-center pruning.
class CliqueCounts {
public:
    explicit CliqueCounts(std::size_t n);
    std::uint32_t get(NodeId u) const { return counts_[u].load(std::memory_order_relaxed); }
    void bump(NodeId u) { counts_[u].fetch_add(1, std::memory_order_relaxed); }

private:
    std::unique_ptr<std::atomic<std::uint32_t>[]> counts_;
};

struct MineResult {
    std::vector<Clique> cliques;
    std::size_t supercenter_exclusions = 0;
};

/// Local mining around `center` over an explicit candidate set (which must
/// contain the center). Covers what it mines in `covered`. At alpha >= alpha_max
/// a still-uncovered center turns the whole candidate set into a pseudo-clique.
std::vector<Clique> mine_local(NodeId center, std::span<const NodeId> candidates, double alpha,
                               const Dataset& dataset, const BuildParams& params,
                               CoverageMask& covered);

/// mineCliques: forms V' = N_k'(center) + center, minus super-centers, then
/// mines it. Clique counts are bumped for every emitted clique.
MineResult mine_cliques(NodeId center, double alpha, CoverageMask& covered, const Dataset& dataset,
                        const KnnGraph& knng, const BuildParams& params, CliqueCounts& counts);

/// Builds the index from a k'-NN graph over the same dataset.
CliqueIndex build(const Dataset& dataset, const KnnGraph& knng, const BuildParams& params,
                  unsigned threads = 1);

/// Mean size of the union of a node's clique co-members, over live nodes.
double effective_out_degree(const CliqueIndex& index);

struct CoveragePoint {
    double alpha = 0.0;
    double uncovered_fraction = 0.0;
};

/// One point per round: the alpha used and the uncovered fraction after it.
std::vector<CoveragePoint> coverage_curve(const BuildMeta& meta, std::size_t n);

/// Upper bound on build rounds: ceil(log_expansion(alpha_max / alpha0)) + 2.
std::size_t max_rounds(const BuildParams& params);

}  // namespace mci
