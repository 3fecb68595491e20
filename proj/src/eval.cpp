#include "mci/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <random>

#include "json.hpp"

#include "mci/baselines.hpp"
#include "mci/parallel.hpp"

namespace mci {

std::vector<float> gaussian_mixture(std::size_t n, std::size_t dim, std::size_t clusters, float spread,
                                    std::uint64_t seed) {
    if (clusters == 0) throw InvalidArgument("gaussian_mixture needs at least one cluster");
    std::mt19937_64 rng(seed);
    std::normal_distribution<float> normal(0.0F, 1.0F);
    std::vector<float> centers(clusters * dim);
    for (auto& c : centers) c = normal(rng);
    std::uniform_int_distribution<std::size_t> pick(0, clusters - 1);
    std::vector<float> out(n * dim);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t c = pick(rng);
        for (std::size_t d = 0; d < dim; ++d) out[i * dim + d] = centers[c * dim + d] + spread * normal(rng);
    }
    return out;
}

std::vector<float> uniform_cube(std::size_t n, std::size_t dim, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<float> u(0.0F, 1.0F);
    std::vector<float> out(n * dim);
    for (auto& x : out) x = u(rng);
    return out;
}

// ---------------------------------------------------------------------------

const char* to_string(WorkloadKind kind) {
    switch (kind) {
        case WorkloadKind::mixed_zipf_labels: return "mixed-zipf-labels";
        case WorkloadKind::fixed_range: return "fixed-range";
        case WorkloadKind::fixed_label: return "fixed-label";
    }
    return "?";
}

WorkloadKind workload_kind_from_string(const std::string& s) {
    if (s == "mixed-zipf-labels") return WorkloadKind::mixed_zipf_labels;
    if (s == "fixed-range") return WorkloadKind::fixed_range;
    if (s == "fixed-label") return WorkloadKind::fixed_label;
    throw InvalidArgument("unknown workload kind `" + s + "`");
}

std::vector<double> preset_range_targets() { return {0.3, 0.15, 0.07, 0.03, 0.015, 0.007, 0.003, 0.001}; }

namespace {

std::vector<std::vector<float>> make_query_vectors(const Dataset& dataset, const QuerySource& source,
                                                   std::mt19937_64& rng) {
    const std::size_t dim = dataset.dim();
    std::vector<std::vector<float>> out;
    if (!source.vectors.empty()) {
        if (source.vectors.size() % dim != 0) throw DimensionError("query vectors are not a multiple of dim");
        for (std::size_t i = 0; i < source.vectors.size(); i += dim) {
            out.emplace_back(source.vectors.begin() + static_cast<std::ptrdiff_t>(i),
                             source.vectors.begin() + static_cast<std::ptrdiff_t>(i + dim));
        }
        return out;
    }
    const std::size_t n = dataset.size();
    std::vector<double> mean(dim, 0.0);
    std::vector<double> sq(dim, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const auto row = dataset.row(static_cast<NodeId>(i));
        for (std::size_t d = 0; d < dim; ++d) {
            mean[d] += row[d];
            sq[d] += static_cast<double>(row[d]) * row[d];
        }
    }
    std::vector<float> scale(dim);
    for (std::size_t d = 0; d < dim; ++d) {
        const double m = mean[d] / static_cast<double>(n);
        const double var = std::max(0.0, sq[d] / static_cast<double>(n) - m * m);
        scale[d] = source.noise * static_cast<float>(std::sqrt(var));
    }
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    std::normal_distribution<float> normal(0.0F, 1.0F);
    for (std::size_t q = 0; q < source.count; ++q) {
        const auto row = dataset.row(static_cast<NodeId>(pick(rng)));
        std::vector<float> v(row.begin(), row.end());
        for (std::size_t d = 0; d < dim; ++d) v[d] += scale[d] * normal(rng);
        out.push_back(std::move(v));
    }
    return out;
}

}  // namespace

void compute_ground_truth(const Dataset& dataset, Workload& workload) {
    const std::size_t nq = workload.queries.size();
    workload.masks.assign(nq, {});
    workload.ground_truth.assign(nq, {});
    workload.selectivities.assign(nq, 0.0);
    for (std::size_t q = 0; q < nq; ++q) {
        workload.masks[q] = evaluate_mask(dataset, workload.queries[q].predicate);
        const auto& mask = workload.masks[q];
        workload.selectivities[q] = selectivity(mask, dataset.size());
        for (const auto& nb : prefilter_bruteforce(dataset, workload.queries[q].vector, mask, workload.k)) {
            workload.ground_truth[q].push_back(nb.id);
        }
    }
}

Workload gen_zipf_label_workload(Dataset& dataset, const ZipfLabelConfig& config, const QuerySource& queries) {
    if (config.num_labels < 1) throw InvalidArgument("num_labels must be >= 1");
    std::mt19937_64 rng(config.seed);
    std::vector<double> weights(config.num_labels);
    for (std::size_t r = 0; r < config.num_labels; ++r) {
        weights[r] = 1.0 / std::pow(static_cast<double>(r + 1), config.zipf_s);
    }
    std::discrete_distribution<std::uint32_t> zipf(weights.begin(), weights.end());

    Workload w;
    w.kind = config.fixed_label ? WorkloadKind::fixed_label : WorkloadKind::mixed_zipf_labels;
    w.seed = config.seed;
    w.k = config.k;
    w.dim = dataset.dim();
    nlohmann::json params = {{"num_labels", config.num_labels}, {"zipf_s", config.zipf_s}};
    if (config.fixed_label) params["label"] = *config.fixed_label;
    w.params_json = params.dump();

    w.data_features.reserve(dataset.size());
    for (std::size_t i = 0; i < dataset.size(); ++i) w.data_features.emplace_back(LabelSet{{zipf(rng)}});
    dataset.set_features(w.data_features);

    for (auto& v : make_query_vectors(dataset, queries, rng)) {
        const std::uint32_t label = config.fixed_label ? *config.fixed_label : zipf(rng);
        w.queries.push_back(Query{std::move(v), Predicate::label(label)});
    }
    compute_ground_truth(dataset, w);
    return w;
}

Workload gen_range_workload(Dataset& dataset, const RangeConfig& config, const QuerySource& queries) {
    for (double t : config.targets) {
        if (!(t > 0.0 && t <= 1.0)) {
            throw InvalidArgument("range target selectivity " + std::to_string(t) + " is outside (0, 1]");
        }
    }
    std::mt19937_64 rng(config.seed);
    const std::size_t n = dataset.size();

    Workload w;
    w.kind = WorkloadKind::fixed_range;
    w.seed = config.seed;
    w.k = config.k;
    w.dim = dataset.dim();
    w.params_json = nlohmann::json{{"targets", config.targets}, {"per_target", config.per_target}}.dump();

    std::uniform_real_distribution<float> unit(0.0F, 1.0F);
    std::vector<float> values(n);
    for (auto& v : values) {
        do {
            v = unit(rng);
        } while (v >= 1.0F);
    }
    w.data_features.assign(values.begin(), values.end());
    dataset.set_features(w.data_features);
    std::sort(values.begin(), values.end());

    QuerySource source = queries;
    source.count = config.targets.size() * config.per_target;
    auto vectors = make_query_vectors(dataset, source, rng);
    if (vectors.size() < source.count) {
        throw InvalidArgument("range workload needs " + std::to_string(source.count) + " query vectors, got " +
                              std::to_string(vectors.size()));
    }
    std::size_t next = 0;
    for (double target : config.targets) {
        const auto count = std::clamp<std::size_t>(
            static_cast<std::size_t>(std::llround(target * static_cast<double>(n))), 1, n);
        for (std::size_t i = 0; i < config.per_target; ++i) {
            Predicate p = Predicate::range(0.0F, 1.0F);
            if (count < n) {
                std::uniform_int_distribution<std::size_t> start(0, n - count);
                const std::size_t r = start(rng);
                p = Predicate::range(values[r], values[r + count - 1]);
            }
            w.queries.push_back(Query{std::move(vectors[next++]), p});
        }
    }
    compute_ground_truth(dataset, w);
    return w;
}

double recall_at_k(std::span<const NodeId> result, std::span<const NodeId> truth, std::size_t k) {
    if (k == 0) return 1.0;
    const std::size_t r = std::min(result.size(), k);
    const std::size_t t = std::min(truth.size(), k);
    std::vector<NodeId> a(result.begin(), result.begin() + static_cast<std::ptrdiff_t>(r));
    std::vector<NodeId> b(truth.begin(), truth.begin() + static_cast<std::ptrdiff_t>(t));
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    std::vector<NodeId> common;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(common));
    return static_cast<double>(common.size()) / static_cast<double>(k);
}

double recall_at_k(std::span<const Neighbor> result, std::span<const NodeId> truth, std::size_t k) {
    std::vector<NodeId> ids;
    ids.reserve(result.size());
    for (const auto& nb : result) ids.push_back(nb.id);
    return recall_at_k(ids, truth, k);
}

// ---------------------------------------------------------------------------

std::vector<BenchRow> bench(const CliqueIndex& index, const Dataset& dataset, const Workload& workload,
                            std::span<const SearchParams> grid, const BenchOptions& options) {
    if (workload.ground_truth.size() != workload.queries.size()) {
        throw InvalidArgument("workload has no ground truth for some queries");
    }
    const std::size_t nq = workload.queries.size();
    std::vector<PredicateMask> masks = workload.masks;
    if (masks.size() != nq || (nq > 0 && masks.front().size() != dataset.size())) {
        masks.clear();
        for (const auto& q : workload.queries) masks.push_back(evaluate_mask(dataset, q.predicate));
    }
    double sel_sum = 0.0;
    for (const auto& m : masks) sel_sum += selectivity(m, dataset.size());
    const unsigned workers = resolve_threads(options.threads);
    std::vector<BenchRow> rows;
    for (const SearchParams& params : grid) {
        std::vector<double> recall(nq, 0.0);
        std::vector<std::uint64_t> comps(nq, 0);
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t rep = 0; rep < std::max<std::size_t>(1, options.repetitions); ++rep) {
            const auto t0 = std::chrono::steady_clock::now();
            parallel_for(0, nq, workers, [&](std::size_t q, unsigned) {
                SearchParams p = params;
                p.rng_seed = params.rng_seed + q;
                SearchStats st;
                const auto res = search(index, dataset, workload.queries[q].vector, masks[q], p, &st);
                recall[q] = recall_at_k(res, workload.ground_truth[q], p.k);
                comps[q] = st.distance_computations;
            }, 1);
            const auto t1 = std::chrono::steady_clock::now();
            best = std::min(best, std::chrono::duration<double>(t1 - t0).count());
        }
        BenchRow row;
        row.dataset = options.dataset_name;
        row.n = dataset.size();
        row.dim = dataset.dim();
        row.k_prime = index.k_prime();
        row.tau = index.tau();
        row.l_s = params.l_s;
        row.epsilon = params.epsilon;
        row.threads = workers;
        if (nq > 0) {
            row.recall_at_k = std::accumulate(recall.begin(), recall.end(), 0.0) / static_cast<double>(nq);
            row.mean_dist_comps = static_cast<double>(std::accumulate(comps.begin(), comps.end(), std::uint64_t{0})) /
                                  static_cast<double>(nq);
            row.mean_selectivity = sel_sum / static_cast<double>(nq);
            row.qps = best > 0.0 ? static_cast<double>(nq) / best : 0.0;
        }
        rows.push_back(row);
    }
    return rows;
}

void write_csv_header(std::ostream& out) {
    out << "dataset,n,dim,k_prime,tau,l_s,epsilon,threads,recall_at_k,qps,mean_dist_comps,mean_selectivity\n";
}

void write_csv(std::ostream& out, std::span<const BenchRow> rows) {
    write_csv_header(out);
    const auto flags = out.flags();
    const auto precision = out.precision();
    out << std::setprecision(6);
    for (const auto& r : rows) {
        out << r.dataset << ',' << r.n << ',' << r.dim << ',' << r.k_prime << ',' << r.tau << ',' << r.l_s << ','
            << r.epsilon << ',' << r.threads << ',' << r.recall_at_k << ',' << r.qps << ',' << r.mean_dist_comps
            << ',' << r.mean_selectivity << '\n';
    }
    out.flags(flags);
    out.precision(precision);
}

// ---------------------------------------------------------------------------

ProbeResult concentration_probe(std::size_t dim, std::size_t n, std::size_t k, double alpha, std::size_t trials,
                                std::uint64_t seed) {
    if (dim < 2) throw InvalidArgument("concentration_probe requires dim >= 2");
    if (n < 3 || k < 1 || k >= n) throw InvalidArgument("concentration_probe requires n >= 3 and 1 <= k < n");
    std::mt19937_64 rng(seed);
    std::normal_distribution<float> normal(0.0F, 1.0F);
    std::vector<float> points(n * dim);
    for (auto& x : points) x = normal(rng);
    const Dataset data(dim, std::move(points));

    ProbeResult out;
    {
        std::uniform_int_distribution<std::size_t> pick(0, n - 1);
        const std::size_t pairs = 20000;
        double s = 0.0;
        double s2 = 0.0;
        std::size_t m = 0;
        while (m < pairs) {
            const auto a = static_cast<NodeId>(pick(rng));
            const auto b = static_cast<NodeId>(pick(rng));
            if (a == b) continue;
            const double d = std::sqrt(static_cast<double>(l2sq(data.row_ptr(a), data.row_ptr(b), dim)));
            s += d;
            s2 += d * d;
            ++m;
        }
        out.mu = s / static_cast<double>(m);
        out.sigma = std::sqrt(std::max(0.0, s2 / static_cast<double>(m) - out.mu * out.mu));
        out.mu_over_sigma = out.sigma > 0.0 ? out.mu / out.sigma : std::numeric_limits<double>::infinity();
        out.threshold = std::sqrt(2.0 * std::log(static_cast<double>(n)));
        out.hypothesis = out.mu_over_sigma > out.threshold;
    }

    std::vector<Neighbor> buf(n - 1);
    auto knn = [&](NodeId u) {
        std::size_t m = 0;
        for (std::size_t v = 0; v < n; ++v) {
            if (v == u) continue;
            buf[m++] = {static_cast<NodeId>(v), l2sq(data.row_ptr(u), data.row_ptr(static_cast<NodeId>(v)), dim)};
        }
        std::partial_sort(buf.begin(), buf.begin() + static_cast<std::ptrdiff_t>(k), buf.end(), closer);
        return std::vector<Neighbor>(buf.begin(), buf.begin() + static_cast<std::ptrdiff_t>(k));
    };

    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    for (std::size_t t = 0; t < trials; ++t) {
        const auto u = static_cast<NodeId>(pick(rng));
        const auto hood = knn(u);
        const double limit = alpha * std::sqrt(static_cast<double>(hood.front().distance));
        std::vector<std::vector<NodeId>> lists(hood.size());
        for (std::size_t i = 0; i < hood.size(); ++i) {
            for (const auto& nb : knn(hood[i].id)) lists[i].push_back(nb.id);
            std::sort(lists[i].begin(), lists[i].end());
        }
        for (std::size_t i = 0; i < hood.size(); ++i) {
            for (std::size_t j = 0; j < hood.size(); ++j) {
                if (i == j) continue;
                const NodeId v = hood[i].id;
                const NodeId w = hood[j].id;
                const double d = std::sqrt(static_cast<double>(l2sq(data.row_ptr(v), data.row_ptr(w), dim)));
                if (d > limit) continue;
                ++out.qualifying_pairs;
                if (std::binary_search(lists[j].begin(), lists[j].end(), v)) ++out.transitive_pairs;
            }
        }
    }
    if (out.qualifying_pairs > 0) {
        out.transitivity_rate =
            static_cast<double>(out.transitive_pairs) / static_cast<double>(out.qualifying_pairs);
    }
    return out;
}

}  // namespace mci
