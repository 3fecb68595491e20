#pragma once

#include <span>
#include <vector>

#include "mci/core.hpp"
#include "mci/index.hpp"
#include "mci/knng.hpp"
#include "mci/search.hpp"

namespace mci {

/// Exact filtered top-k: scans the mask's set bits, keeps the k closest with
/// ties to the smaller id. The ground truth for every recall number.
std::vector<Neighbor> prefilter_bruteforce(const Dataset& dataset, std::span<const float> query,
                                           const PredicateMask& mask, std::size_t k);
std::vector<Neighbor> prefilter_bruteforce(const Dataset& dataset, const Query& query, std::size_t k);

/// Unfiltered MCI search for ceil(k * expansion) candidates, then predicate
/// rejection. `base` supplies epsilon, seed and a minimum beam width.
std::vector<Neighbor> postfilter_search(const CliqueIndex& index, const Dataset& dataset,
                                        std::span<const float> query, const PredicateMask& mask,
                                        std::size_t k, double expansion, const SearchParams& base = {},
                                        SearchStats* stats = nullptr);
std::vector<Neighbor> postfilter_search(const CliqueIndex& index, const Dataset& dataset, const Query& query,
                                        std::size_t k, double expansion, const SearchParams& base = {});

}  // namespace mci
