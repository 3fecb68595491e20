#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "mci/core.hpp"
#include "mci/index.hpp"
#include "mci/search.hpp"

namespace mci {

// ---------------------------------------------------------------------------
// Synthetic data
// ---------------------------------------------------------------------------

/// n points from `clusters` isotropic Gaussian blobs with centers drawn from
/// N(0, 1) per coordinate and per-coordinate spread `spread`.
std::vector<float> gaussian_mixture(std::size_t n, std::size_t dim, std::size_t clusters, float spread,
                                    std::uint64_t seed);
std::vector<float> uniform_cube(std::size_t n, std::size_t dim, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Workloads
// ---------------------------------------------------------------------------

enum class WorkloadKind : std::uint8_t { mixed_zipf_labels, fixed_range, fixed_label };

const char* to_string(WorkloadKind kind);
WorkloadKind workload_kind_from_string(const std::string& s);

struct Workload {
    WorkloadKind kind = WorkloadKind::mixed_zipf_labels;
    std::uint64_t seed = 0;
    std::size_t k = 10;
    std::size_t dim = 0;
    /// Generator parameters as JSON text (stored in the workload file header).
    std::string params_json = "{}";
    /// Features the generator attached to the data points.
    std::vector<Feature> data_features;
    std::vector<Query> queries;
    std::vector<PredicateMask> masks;
    std::vector<std::vector<NodeId>> ground_truth;
    std::vector<double> selectivities;
};

/// Where query vectors come from: explicit rows, or perturbed data rows.
struct QuerySource {
    /// Row-major, dim columns. When empty, `count` data rows are drawn at random
    /// and jittered by `noise` times each coordinate's standard deviation.
    std::vector<float> vectors;
    std::size_t count = 100;
    float noise = 0.05F;
};

struct ZipfLabelConfig {
    std::size_t num_labels = 12;
    double zipf_s = 1.0;
    std::size_t k = 10;
    std::uint64_t seed = 1;
    /// fixed-label workloads: every query asks for this label.
    std::optional<std::uint32_t> fixed_label;
};

struct RangeConfig {
    std::vector<double> targets;
    std::size_t per_target = 10;
    std::size_t k = 10;
    std::uint64_t seed = 1;
};

/// The controlled range selectivities used by the range-filter experiments.
std::vector<double> preset_range_targets();

/// Assigns each point one Zipf-distributed label (label 0 is the most
/// frequent) and draws each query's label by the same law. Replaces the
/// dataset's features.
Workload gen_zipf_label_workload(Dataset& dataset, const ZipfLabelConfig& config, const QuerySource& queries);

/// Attaches a uniform [0,1) scalar to each point; per target, `per_target`
/// queries get an interval holding round(target * n) points at a random
/// position. Replaces the dataset's features.
Workload gen_range_workload(Dataset& dataset, const RangeConfig& config, const QuerySource& queries);

/// Recomputes masks, ground truth and selectivities from the current dataset.
void compute_ground_truth(const Dataset& dataset, Workload& workload);

double recall_at_k(std::span<const NodeId> result, std::span<const NodeId> truth, std::size_t k);
double recall_at_k(std::span<const Neighbor> result, std::span<const NodeId> truth, std::size_t k);

// ---------------------------------------------------------------------------
// Benchmark
// ---------------------------------------------------------------------------

struct BenchRow {
    std::string dataset = "dataset";
    std::size_t n = 0;
    std::size_t dim = 0;
    std::uint32_t k_prime = 0;
    std::uint32_t tau = 0;
    std::uint32_t l_s = 0;
    double epsilon = 0.0;
    unsigned threads = 1;
    double recall_at_k = 0.0;
    double qps = 0.0;
    double mean_dist_comps = 0.0;
    double mean_selectivity = 0.0;
};

struct BenchOptions {
    unsigned threads = 1;
    std::size_t repetitions = 3;
    std::string dataset_name = "dataset";
};

/// Runs every query at each grid point; QPS is the best of `repetitions`
/// wall-clock runs. Predicate masks are evaluated once, outside the timer.
std::vector<BenchRow> bench(const CliqueIndex& index, const Dataset& dataset, const Workload& workload,
                            std::span<const SearchParams> grid, const BenchOptions& options = {});

void write_csv_header(std::ostream& out);
void write_csv(std::ostream& out, std::span<const BenchRow> rows);

// ---------------------------------------------------------------------------
// Distance concentration probe
// ---------------------------------------------------------------------------

struct ProbeResult {
    double mu = 0.0;
    double sigma = 0.0;
    double mu_over_sigma = 0.0;
    double threshold = 0.0;  // sqrt(2 ln n)
    bool hypothesis = false; // mu / sigma > threshold
    std::size_t qualifying_pairs = 0;
    std::size_t transitive_pairs = 0;
    /// Empty when no pair qualified.
    std::optional<double> transitivity_rate;
};

/// Samples n standard Gaussian points; over `trials` random centers u with
/// nearest neighbor x, checks for ordered pairs v != w in N_k(u) with
/// d(v, w) <= alpha * d(u, x) whether v is in N_k(w).
ProbeResult concentration_probe(std::size_t dim, std::size_t n, std::size_t k, double alpha, std::size_t trials,
                                std::uint64_t seed);

}  // namespace mci
