#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mci/core.hpp"

namespace mci {

/// Rows of ids stored in one pool. Each row owns a [start, start + cap) slot
/// range; rows that outgrow their slot are moved to the end of the pool.
/// compact() squeezes out the slack left behind.
class RaggedArray {
public:
    std::size_t rows() const { return start_.size(); }

    std::span<const std::uint32_t> row(std::size_t r) const {
        return {pool_.data() + start_[r], len_[r]};
    }
    std::size_t row_size(std::size_t r) const { return len_[r]; }

    std::size_t append_row(std::span<const std::uint32_t> values);
    void push_back(std::size_t r, std::uint32_t value);
    /// Removes the first occurrence of value; returns false when absent.
    bool erase(std::size_t r, std::uint32_t value);
    void clear_row(std::size_t r);

    /// Total live entries across rows.
    std::size_t total() const { return total_; }
    std::size_t pool_size() const { return pool_.size(); }
    void compact();
    void reserve(std::size_t rows, std::size_t entries);

    /// Builds a tightly packed array from CSR form.
    static RaggedArray from_csr(std::span<const std::uint64_t> offsets,
                                std::span<const std::uint32_t> values);

private:
    std::vector<std::uint32_t> pool_;
    std::vector<std::uint64_t> start_;
    std::vector<std::uint32_t> len_;
    std::vector<std::uint32_t> cap_;
    std::size_t total_ = 0;
};

enum class CliqueKind : std::uint8_t { mined, pseudo };

struct Clique {
    std::vector<NodeId> members;  // ascending, unique
    CliqueKind kind = CliqueKind::mined;
    /// True-distance edge threshold the clique was mined under (audit only);
    /// +inf for pseudo-cliques.
    double threshold = 0.0;
    /// Node whose local neighborhood produced the clique (audit only).
    NodeId center = 0;

    friend bool operator==(const Clique&, const Clique&) = default;
};

/// Per-round record of a build.
struct BuildRound {
    double alpha = 0.0;
    std::size_t processed = 0;          // centers mined this round
    std::size_t uncovered_after = 0;    // nodes still uncovered after the round
    std::size_t cliques_added = 0;
    std::size_t pseudo_added = 0;

    friend bool operator==(const BuildRound&, const BuildRound&) = default;
};

struct BuildMeta {
    std::vector<BuildRound> rounds;
    std::size_t pseudo_cliques = 0;
    std::size_t supercenter_exclusions = 0;
    std::vector<std::string> warnings;

    friend bool operator==(const BuildMeta&, const BuildMeta&) = default;
};

/// The maximal clique index: cliques over node ids plus the node -> clique
/// inverse. Deleted nodes keep their id but are no longer live.
class CliqueIndex {
public:
    CliqueIndex() = default;
    CliqueIndex(std::size_t n, std::uint32_t k_prime, std::uint32_t tau);

    std::size_t size() const { return live_.size(); }
    std::uint32_t k_prime() const { return k_prime_; }
    std::uint32_t tau() const { return tau_; }

    std::size_t clique_count() const { return members_.rows(); }
    std::span<const NodeId> members(std::size_t c) const { return members_.row(c); }
    CliqueKind kind(std::size_t c) const { return kinds_[c]; }
    std::span<const std::uint32_t> cliques_of(NodeId u) const { return node_cliques_.row(u); }

    /// Audit thresholds, one per clique; empty after deserialization.
    std::span<const double> thresholds() const { return thresholds_; }
    /// Audit mining centers, maintained alongside thresholds().
    std::span<const NodeId> centers() const { return centers_; }

    bool live(NodeId u) const { return live_[u] != 0; }
    std::size_t live_count() const { return live_count_; }
    std::vector<NodeId> deleted_ids() const;

    /// Sum of clique sizes.
    std::size_t total_members() const { return members_.total(); }
    std::size_t pseudo_count() const;

    const BuildMeta& meta() const { return meta_; }
    BuildMeta& meta() { return meta_; }

    // Mutation. Members must be ascending and refer to live nodes.
    std::uint32_t add_clique(const Clique& clique);
    void add_member(std::uint32_t clique, NodeId u);
    void remove_member(std::uint32_t clique, NodeId u);
    /// Drops every member of a clique, leaving an empty row.
    void dissolve(std::uint32_t clique);
    NodeId add_node();
    void mark_deleted(NodeId u);

    /// Removes slack and empty cliques; clique ids are renumbered.
    void compact();

    /// Throws Error naming the first violated structural check.
    void validate(bool check_size_bound = true) const;

    friend bool equal_structure(const CliqueIndex& a, const CliqueIndex& b);

private:
    friend class IndexCodec;

    std::uint32_t k_prime_ = 0;
    std::uint32_t tau_ = 0;
    RaggedArray members_;
    RaggedArray node_cliques_;
    std::vector<CliqueKind> kinds_;
    std::vector<double> thresholds_;
    std::vector<NodeId> centers_;
    std::vector<std::uint8_t> live_;
    std::size_t live_count_ = 0;
    BuildMeta meta_;
};

/// Clique-by-clique comparison of members, kinds and liveness.
bool equal_structure(const CliqueIndex& a, const CliqueIndex& b);

}  // namespace mci
