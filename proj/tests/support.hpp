#pragma once

// Independent oracles and fixtures shared by the test binaries. Nothing here
// calls into the library's distance kernel or search code.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <random>
#include <vector>

#include "mci/build.hpp"
#include "mci/core.hpp"
#include "mci/index.hpp"
#include "mci/knng.hpp"

namespace testing {

using mci::NodeId;

/// True Euclidean distance in double precision.
inline double true_dist(const float* a, const float* b, std::size_t dim) {
    double s = 0.0;
    for (std::size_t i = 0; i < dim; ++i) {
        const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
        s += d * d;
    }
    return std::sqrt(s);
}

inline double true_dist(const mci::Dataset& ds, NodeId a, NodeId b) {
    return true_dist(ds.row_ptr(a), ds.row_ptr(b), ds.dim());
}

/// O(n^2) k-NN by full sort on double distances, ties to the smaller id.
inline std::vector<std::vector<NodeId>> brute_knn(const mci::Dataset& ds, std::size_t k) {
    const std::size_t n = ds.size();
    std::vector<std::vector<NodeId>> out(n);
    for (NodeId u = 0; u < n; ++u) {
        std::vector<std::pair<double, NodeId>> all;
        for (NodeId v = 0; v < n; ++v) {
            if (v != u) all.emplace_back(true_dist(ds, u, v), v);
        }
        std::sort(all.begin(), all.end());
        for (std::size_t i = 0; i < std::min(k, all.size()); ++i) out[u].push_back(all[i].second);
    }
    return out;
}

/// Exact filtered top-k ids by full sort.
inline std::vector<NodeId> brute_filtered(const mci::Dataset& ds, std::span<const float> q,
                                          const std::function<bool(NodeId)>& valid, std::size_t k) {
    std::vector<std::pair<double, NodeId>> all;
    for (NodeId v = 0; v < ds.size(); ++v) {
        if (valid(v)) all.emplace_back(true_dist(q.data(), ds.row_ptr(v), ds.dim()), v);
    }
    std::sort(all.begin(), all.end());
    std::vector<NodeId> ids;
    for (std::size_t i = 0; i < std::min(k, all.size()); ++i) ids.push_back(all[i].second);
    return ids;
}

inline std::vector<float> random_matrix(std::size_t n, std::size_t dim, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<float> g(0.0F, 1.0F);
    std::vector<float> v(n * dim);
    for (auto& x : v) x = g(rng);
    return v;
}

struct CliqueAudit {
    std::size_t validity_violations = 0;
    std::size_t maximality_violations = 0;
    std::size_t mined_checked = 0;
};

/// Re-checks every mined clique: all pairwise true distances within the
/// recorded threshold, and no node of the center's candidate set adjacent to
/// every member. Candidate sets drop nodes whose final clique count exceeds
/// the super-center cap; those may have been excluded when the clique was
/// mined. Comparisons allow a 1e-5 relative margin for float rounding.
inline CliqueAudit audit_cliques(const mci::CliqueIndex& index, const mci::Dataset& ds, const mci::KnnGraph& knng,
                                 double supercenter_fraction) {
    constexpr double slack = 1e-5;
    CliqueAudit audit;
    const auto thresholds = index.thresholds();
    const auto centers = index.centers();
    const double cap = std::max(1.0, supercenter_fraction * static_cast<double>(ds.size()));
    for (std::size_t c = 0; c < index.clique_count(); ++c) {
        if (index.kind(c) != mci::CliqueKind::mined) continue;
        ++audit.mined_checked;
        const double t = thresholds[c];
        const auto members = index.members(c);
        for (std::size_t i = 0; i < members.size(); ++i) {
            for (std::size_t j = i + 1; j < members.size(); ++j) {
                if (true_dist(ds, members[i], members[j]) > t * (1.0 + slack) + 1e-12) {
                    ++audit.validity_violations;
                }
            }
        }
        std::vector<NodeId> local{centers[c]};
        for (const auto& nb : knng.neighbors(centers[c])) {
            if (static_cast<double>(index.cliques_of(nb.id).size()) <= cap) local.push_back(nb.id);
        }
        for (NodeId x : local) {
            if (std::binary_search(members.begin(), members.end(), x)) continue;
            bool adjacent_to_all = true;
            for (NodeId m : members) {
                if (true_dist(ds, x, m) > t * (1.0 - slack)) {
                    adjacent_to_all = false;
                    break;
                }
            }
            if (adjacent_to_all) ++audit.maximality_violations;
        }
    }
    return audit;
}

/// Every live node in at least one clique.
inline std::size_t uncovered_live(const mci::CliqueIndex& index) {
    std::size_t missing = 0;
    for (NodeId u = 0; u < index.size(); ++u) {
        if (index.live(u) && index.cliques_of(u).empty()) ++missing;
    }
    return missing;
}

/// Mean size of the union of co-members, computed with std::set-free sorting.
inline double oracle_out_degree(const mci::CliqueIndex& index) {
    double total = 0.0;
    std::size_t live = 0;
    for (NodeId u = 0; u < index.size(); ++u) {
        if (!index.live(u)) continue;
        ++live;
        std::vector<NodeId> all;
        for (auto c : index.cliques_of(u)) {
            for (NodeId v : index.members(c)) {
                if (v != u) all.push_back(v);
            }
        }
        std::sort(all.begin(), all.end());
        all.erase(std::unique(all.begin(), all.end()), all.end());
        total += static_cast<double>(all.size());
    }
    return live == 0 ? 0.0 : total / static_cast<double>(live);
}

inline std::vector<std::vector<NodeId>> clique_sets(const mci::CliqueIndex& index) {
    std::vector<std::vector<NodeId>> out;
    for (std::size_t c = 0; c < index.clique_count(); ++c) {
        out.emplace_back(index.members(c).begin(), index.members(c).end());
    }
    std::sort(out.begin(), out.end());
    return out;
}

// ---------------------------------------------------------------------------
// Golden toy datasets
// ---------------------------------------------------------------------------

/// Two unit tetrahedra {0,1,2,4} and {2,3,4,5} sharing the edge 2-4.
inline mci::Dataset fig3_dataset() {
    return mci::Dataset(3, {-0.707107F, 0.5F, 0.0F,   //
                            -0.707107F, -0.5F, 0.0F,  //
                            0.0F, 0.0F, 0.5F,         //
                            0.707107F, 0.5F, 0.0F,    //
                            0.0F, 0.0F, -0.5F,        //
                            0.707107F, -0.5F, 0.0F});
}

/// Pairwise distance matrix of the 9-point construction example.
inline const std::array<std::array<double, 9>, 9>& fig4_matrix() {
    static const std::array<std::array<double, 9>, 9> m{{
        {0.00, 1.25, 1.20, 1.00, 0.80, 1.10, 1.25, 1.30, 0.85},
        {1.25, 0.00, 0.95, 1.40, 1.00, 1.40, 1.00, 0.30, 1.25},
        {1.20, 0.95, 0.00, 1.40, 0.85, 1.40, 0.95, 1.00, 1.20},
        {1.00, 1.40, 1.40, 0.00, 1.40, 0.90, 1.40, 1.30, 1.20},
        {0.80, 1.00, 0.85, 1.40, 0.00, 1.40, 1.00, 1.10, 0.90},
        {1.10, 1.40, 1.40, 0.90, 1.40, 0.00, 1.40, 1.30, 1.20},
        {1.25, 1.00, 0.95, 1.40, 1.00, 1.40, 0.00, 1.10, 1.20},
        {1.30, 0.30, 1.00, 1.30, 1.10, 1.30, 1.10, 0.00, 1.30},
        {0.85, 1.25, 1.20, 1.20, 0.90, 1.20, 1.20, 1.30, 0.00},
    }};
    return m;
}

/// An exact 8-D embedding of fig4_matrix() (rounded to 6 decimals).
inline mci::Dataset fig4_dataset() {
    return mci::Dataset(8, {
        0.023116F, 0.178998F, 0.250480F, 0.162754F, -0.137311F, 0.207447F, 0.391668F, -0.394174F,
        -0.079101F, 0.076622F, 0.038042F, 0.046513F, 0.102068F, 0.272660F, -0.337900F, 0.548750F,
        0.002097F, 0.076948F, -0.221593F, -0.202319F, -0.433979F, -0.251090F, 0.100646F, 0.436519F,
        -0.015896F, -0.080369F, -0.195376F, 0.365178F, -0.155148F, -0.069936F, -0.324317F, -0.712841F,
        -0.014358F, -0.229885F, 0.165970F, -0.022848F, -0.124576F, 0.131823F, 0.509416F, 0.246197F,
        -0.009693F, -0.017544F, 0.187882F, -0.412524F, 0.056674F, -0.151145F, -0.371675F, -0.688318F,
        0.010823F, 0.014620F, 0.116677F, 0.190036F, 0.284135F, -0.584393F, 0.071040F, 0.386372F,
        0.078580F, -0.041250F, -0.013016F, 0.004370F, 0.048133F, 0.282805F, -0.512927F, 0.433799F,
        0.004430F, 0.021861F, -0.329067F, -0.131160F, 0.360005F, 0.161829F, 0.474049F, -0.256304F,
    });
}

inline mci::BuildParams toy_params(std::uint32_t k_prime) {
    mci::BuildParams p;
    p.k_prime = k_prime;
    p.tau = 3;
    return p;
}

}  // namespace testing
