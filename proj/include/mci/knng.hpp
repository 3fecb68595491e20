#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mci/core.hpp"

namespace mci {

struct Neighbor {
    NodeId id = 0;
    float distance = 0.0F;  // squared L2

    friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

/// Distance first, then smaller id.
inline bool closer(const Neighbor& a, const Neighbor& b) {
    return a.distance < b.distance || (a.distance == b.distance && a.id < b.id);
}

/// Directed k'-nearest-neighbor graph stored as n fixed-length rows.
class KnnGraph {
public:
    KnnGraph() = default;
    KnnGraph(std::size_t n, std::size_t k_prime);

    std::size_t size() const { return n_; }
    std::size_t k_prime() const { return k_; }

    std::span<const Neighbor> neighbors(NodeId u) const {
        return {rows_.data() + static_cast<std::size_t>(u) * k_, k_};
    }
    std::span<Neighbor> neighbors(NodeId u) {
        return {rows_.data() + static_cast<std::size_t>(u) * k_, k_};
    }

    /// Clamping and other non-fatal notes produced while building.
    std::vector<std::string> warnings;

private:
    std::size_t n_ = 0;
    std::size_t k_ = 0;
    std::vector<Neighbor> rows_;
};

/// Exact k'-NN by full scan; ties broken by smaller id. k' >= n is clamped to n-1.
KnnGraph exact_knn(const Dataset& dataset, std::size_t k_prime, unsigned threads = 1);

struct NnDescentParams {
    std::size_t iterations = 12;
    double sample_rate = 1.0;
    double delta = 0.001;  // stop when updates < delta * n * k'
    std::uint64_t seed = 42;
};

/// Approximate k'-NN graph via neighbor-of-neighbor joins (NN-Descent).
/// Single-threaded runs are deterministic for a fixed seed.
KnnGraph nn_descent(const Dataset& dataset, std::size_t k_prime, const NnDescentParams& params,
                    unsigned threads = 1);

/// Exact below `exact_limit` points, NN-Descent above.
KnnGraph build_knng(const Dataset& dataset, std::size_t k_prime, unsigned threads = 1,
                    const NnDescentParams& params = {}, std::size_t exact_limit = 20000);

/// Mean fraction of each exact row recovered by the approximate row.
double graph_recall(const KnnGraph& approx, const KnnGraph& exact);

}  // namespace mci
