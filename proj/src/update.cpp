#include "mci/update.hpp"

#include <algorithm>
#include <cmath>

#include "mci/search.hpp"

namespace mci {

namespace {

std::vector<NodeId> nearest_live(const CliqueIndex& index, const Dataset& dataset, std::span<const float> v,
                                 const UpdateParams& params, std::uint64_t salt) {
    const std::uint32_t k = index.k_prime();
    if (k == 0 || index.live_count() == 0) return {};
    SearchParams sp;
    sp.k = k;
    sp.l_s = k;
    sp.epsilon = params.epsilon;
    sp.rng_seed = params.rng_seed ^ (salt * 0x9E3779B97F4A7C15ULL);
    const PredicateMask all(index.size(), true);
    std::vector<NodeId> out;
    for (const auto& nb : search(index, dataset, v, all, sp)) out.push_back(nb.id);
    return out;
}

/// Mines around `center` over `center + neighbors` with escalating alpha until
/// the center is covered; adds the cliques to the index.
void mine_until_covered(CliqueIndex& index, const Dataset& dataset, NodeId center,
                        std::vector<NodeId> neighbors, const BuildParams& params) {
    neighbors.push_back(center);
    std::sort(neighbors.begin(), neighbors.end());
    neighbors.erase(std::unique(neighbors.begin(), neighbors.end()), neighbors.end());

    CoverageMask covered(index.size());
    for (NodeId u : neighbors) {
        if (!index.cliques_of(u).empty()) covered.set(u);
    }
    double alpha = params.alpha0;
    while (!covered.test(center)) {
        for (const Clique& c : mine_local(center, neighbors, alpha, dataset, params, covered)) {
            index.add_clique(c);
        }
        alpha *= params.alpha_expansion;
    }
}

}  // namespace

NodeId insert_node(CliqueIndex& index, Dataset& dataset, std::span<const float> vector, Feature feature,
                   const UpdateParams& params, std::vector<NodeId>* retrieved) {
    params.build.validate();
    if (index.size() != dataset.size()) throw DimensionError("index and dataset differ in node count");
    if (vector.size() != dataset.dim()) {
        throw DimensionError("inserted vector has dim " + std::to_string(vector.size()) + ", dataset dim is " +
                             std::to_string(dataset.dim()));
    }
    const auto near = nearest_live(index, dataset, vector, params, index.size());
    if (retrieved != nullptr) *retrieved = near;

    const NodeId u = dataset.append(vector, std::move(feature));
    const NodeId slot = index.add_node();
    if (slot != u) throw Error("index and dataset ids diverged during insertion");

    std::vector<NodeId> r_sorted = near;
    std::sort(r_sorted.begin(), r_sorted.end());
    std::vector<std::uint32_t> touched;
    for (NodeId v : near) {
        for (std::uint32_t c : index.cliques_of(v)) touched.push_back(c);
    }
    std::sort(touched.begin(), touched.end());
    touched.erase(std::unique(touched.begin(), touched.end()), touched.end());

    std::vector<std::uint32_t> joined;
    for (std::uint32_t c : touched) {
        const auto members = index.members(c);
        std::size_t overlap = 0;
        for (NodeId m : members) {
            if (std::binary_search(r_sorted.begin(), r_sorted.end(), m)) ++overlap;
        }
        const auto need = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(members.size()))));
        if (overlap >= need) joined.push_back(c);
    }
    for (std::uint32_t c : joined) index.add_member(c, u);

    if (joined.empty()) mine_until_covered(index, dataset, u, near, params.build);
    return u;
}

void delete_node(CliqueIndex& index, const Dataset& dataset, NodeId id, const UpdateParams& params) {
    params.build.validate();
    index.mark_deleted(id);

    const std::vector<std::uint32_t> cliques(index.cliques_of(id).begin(), index.cliques_of(id).end());
    std::vector<NodeId> survivors;
    for (std::uint32_t c : cliques) {
        const std::size_t before = index.members(c).size();
        index.remove_member(c, id);
        const std::size_t after = index.members(c).size();
        if (after == 0 || (before >= index.tau() && after < index.tau())) {
            survivors.insert(survivors.end(), index.members(c).begin(), index.members(c).end());
            index.dissolve(c);
        }
    }
    std::sort(survivors.begin(), survivors.end());
    survivors.erase(std::unique(survivors.begin(), survivors.end()), survivors.end());

    for (NodeId s : survivors) {
        if (!index.cliques_of(s).empty()) continue;
        auto near = nearest_live(index, dataset, dataset.row(s), params, s);
        mine_until_covered(index, dataset, s, std::move(near), params.build);
    }
}

}  // namespace mci
