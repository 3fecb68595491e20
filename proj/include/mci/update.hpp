#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mci/build.hpp"
#include "mci/core.hpp"
#include "mci/index.hpp"

namespace mci {

struct UpdateParams {
    BuildParams build;
    /// Seed scale and RNG seed for the neighbor retrieval that precedes each
    /// update; beam width and k are both the index's k'.
    double epsilon = 1.0;
    std::uint64_t rng_seed = 0;
};

/// Appends the point to the dataset and links it into the index: it joins
/// every clique C with |C ∩ R| >= ceil(sqrt(|C|)), R being its approximate
/// k' nearest live neighbors. With no such clique, a clique is mined from
/// R + {u} with alpha escalating from alpha0 until u is covered. R is
/// written to `retrieved` when given.
NodeId insert_node(CliqueIndex& index, Dataset& dataset, std::span<const float> vector, Feature feature,
                   const UpdateParams& params, std::vector<NodeId>* retrieved = nullptr);

/// Removes the node from every clique. Cliques that fall from >= tau to
/// below tau are dissolved and their uncovered survivors re-mined locally.
/// Throws NotFoundError for unknown or already-deleted ids.
void delete_node(CliqueIndex& index, const Dataset& dataset, NodeId id, const UpdateParams& params);

}  // namespace mci
