#include "mci/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

namespace mci {

std::vector<Neighbor> prefilter_bruteforce(const Dataset& dataset, std::span<const float> query,
                                           const PredicateMask& mask, std::size_t k) {
    if (query.size() != dataset.dim()) {
        throw DimensionError("query has dim " + std::to_string(query.size()) + ", dataset dim is " +
                             std::to_string(dataset.dim()));
    }
    if (mask.size() != dataset.size()) throw DimensionError("mask length differs from dataset size");
    if (k == 0) return {};
    // Max-heap on (distance, id) holding the k best so far.
    std::priority_queue<Neighbor, std::vector<Neighbor>, decltype(&closer)> heap(closer);
    const std::size_t dim = dataset.dim();
    mask.for_each_set([&](NodeId u) {
        const Neighbor nb{u, l2sq(query.data(), dataset.row_ptr(u), dim)};
        if (heap.size() < k) {
            heap.push(nb);
        } else if (closer(nb, heap.top())) {
            heap.pop();
            heap.push(nb);
        }
    });
    std::vector<Neighbor> out(heap.size());
    for (std::size_t i = out.size(); i-- > 0;) {
        out[i] = heap.top();
        heap.pop();
    }
    return out;
}

std::vector<Neighbor> prefilter_bruteforce(const Dataset& dataset, const Query& query, std::size_t k) {
    return prefilter_bruteforce(dataset, query.vector, evaluate_mask(dataset, query.predicate), k);
}

std::vector<Neighbor> postfilter_search(const CliqueIndex& index, const Dataset& dataset,
                                        std::span<const float> query, const PredicateMask& mask,
                                        std::size_t k, double expansion, const SearchParams& base,
                                        SearchStats* stats) {
    if (!(expansion >= 1.0)) throw InvalidArgument("post-filter expansion must be >= 1");
    if (k == 0) return {};
    const auto candidates = static_cast<std::uint32_t>(std::ceil(static_cast<double>(k) * expansion));
    SearchParams p = base;
    p.k = candidates;
    p.l_s = std::max(base.l_s, candidates);
    p.seed_mode = SeedMode::reservoir;
    const auto raw = search(index, dataset, query, PredicateMask(dataset.size(), true), p, stats);
    std::vector<Neighbor> out;
    for (const auto& nb : raw) {
        if (!mask.test(nb.id)) continue;
        out.push_back(nb);
        if (out.size() == k) break;
    }
    return out;
}

std::vector<Neighbor> postfilter_search(const CliqueIndex& index, const Dataset& dataset, const Query& query,
                                        std::size_t k, double expansion, const SearchParams& base) {
    return postfilter_search(index, dataset, query.vector, evaluate_mask(dataset, query.predicate), k, expansion,
                             base);
}

}  // namespace mci
