// mci: build, query, benchmark and maintain maximal clique indexes.
//
// Exit codes: 0 ok, 1 usage error, 2 runtime error.

#include <chrono>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "mci/baselines.hpp"
#include "mci/build.hpp"
#include "mci/eval.hpp"
#include "mci/io.hpp"
#include "mci/knng.hpp"
#include "mci/search.hpp"
#include "mci/update.hpp"

using namespace mci;
using nlohmann::json;

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

json meta_json(const BuildMeta& meta, std::size_t n) {
    json rounds = json::array();
    for (const auto& r : meta.rounds) {
        rounds.push_back({{"alpha", r.alpha},
                          {"processed", r.processed},
                          {"uncovered_after", r.uncovered_after},
                          {"cliques_added", r.cliques_added},
                          {"pseudo_added", r.pseudo_added}});
    }
    json curve = json::array();
    for (const auto& p : coverage_curve(meta, n)) curve.push_back({{"alpha", p.alpha}, {"uncovered", p.uncovered_fraction}});
    return {{"rounds", rounds},
            {"round_count", meta.rounds.size()},
            {"pseudo_cliques", meta.pseudo_cliques},
            {"supercenter_exclusions", meta.supercenter_exclusions},
            {"warnings", meta.warnings},
            {"coverage_curve", curve}};
}

Dataset load_dataset(const std::string& path, const std::string& features) {
    Dataset ds = load_vecs(path);
    if (!features.empty()) ds.set_features(load_features_text(features));
    return ds;
}

std::vector<std::uint32_t> parse_u32_list(const std::string& s) {
    std::vector<std::uint32_t> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        try {
            std::size_t used = 0;
            const unsigned long v = std::stoul(item, &used);
            if (used != item.size()) throw std::invalid_argument(item);
            out.push_back(static_cast<std::uint32_t>(v));
        } catch (const std::exception&) {
            throw UsageError("not a non-negative integer: `" + item + "`");
        }
    }
    return out;
}

std::vector<double> parse_double_list(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw UsageError("not a number: `" + item + "`");
        }
    }
    return out;
}

/// Ids from an ivecs file (all records concatenated) or a text file with one
/// id per whitespace-separated token.
std::vector<NodeId> load_ids(const std::string& path) {
    std::vector<NodeId> ids;
    if (path.size() > 6 && path.substr(path.size() - 6) == ".ivecs") {
        for (const auto& row : load_ivecs(path)) {
            for (auto v : row) {
                if (v < 0) throw ParseError("negative id in " + path);
                ids.push_back(static_cast<NodeId>(v));
            }
        }
        return ids;
    }
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path);
    long long v = 0;
    while (in >> v) {
        if (v < 0) throw ParseError("negative id in " + path);
        ids.push_back(static_cast<NodeId>(v));
    }
    if (!in.eof()) throw ParseError("non-numeric token in " + path);
    return ids;
}

// ---------------------------------------------------------------------------

struct BuildArgs {
    std::string data, features, out, knng = "auto";
    std::uint32_t k_prime = 200, tau = 50;
    double alpha0 = 1.2, expansion = 2.0, alpha_max = 10.0, supercenter = 0.01;
    unsigned threads = 1;
    std::size_t nnd_iterations = 12;
};

int run_build(const BuildArgs& a) {
    const Dataset ds = load_dataset(a.data, a.features);
    BuildParams p;
    p.k_prime = a.k_prime;
    p.tau = a.tau;
    p.alpha0 = a.alpha0;
    p.alpha_expansion = a.expansion;
    p.alpha_max = a.alpha_max;
    p.supercenter_fraction = a.supercenter;
    try {
        p.validate();
    } catch (const InvalidArgument& e) {
        throw UsageError(e.what());
    }
    NnDescentParams nd;
    nd.iterations = a.nnd_iterations;
    const auto t0 = std::chrono::steady_clock::now();
    KnnGraph g;
    if (a.knng == "exact") {
        g = exact_knn(ds, a.k_prime, a.threads);
    } else if (a.knng == "nn-descent") {
        g = nn_descent(ds, a.k_prime, nd, a.threads);
    } else {
        g = build_knng(ds, a.k_prime, a.threads, nd);
    }
    const auto t1 = std::chrono::steady_clock::now();
    CliqueIndex index = build(ds, g, p, a.threads);
    const auto t2 = std::chrono::steady_clock::now();
    for (const auto& w : g.warnings) index.meta().warnings.push_back(w);
    save_index(a.out, index);
    json out = meta_json(index.meta(), ds.size());
    out["n"] = ds.size();
    out["dim"] = ds.dim();
    out["cliques"] = index.clique_count();
    out["total_members"] = index.total_members();
    out["knng_seconds"] = std::chrono::duration<double>(t1 - t0).count();
    out["build_seconds"] = std::chrono::duration<double>(t2 - t1).count();
    std::cout << out.dump(2) << '\n';
    return 0;
}

struct StatsArgs {
    std::string index;
    bool as_json = false;
};

int run_stats(const StatsArgs& a) {
    const CliqueIndex index = load_index(a.index);
    const std::size_t n = index.size();
    const double per_node = static_cast<double>(index.total_members()) / static_cast<double>(n);
    const double degree = effective_out_degree(index);
    const auto curve = coverage_curve(index.meta(), n);
    if (a.as_json) {
        json out = meta_json(index.meta(), n);
        out["n"] = n;
        out["live"] = index.live_count();
        out["k_prime"] = index.k_prime();
        out["tau"] = index.tau();
        out["cliques"] = index.clique_count();
        out["total_members"] = index.total_members();
        out["members_per_node"] = per_node;
        out["effective_out_degree"] = degree;
        out["pseudo_cliques"] = index.pseudo_count();
        std::cout << out.dump(2) << '\n';
        return 0;
    }
    std::cout << "n                     " << n << " (" << index.live_count() << " live)\n"
              << "k' / tau              " << index.k_prime() << " / " << index.tau() << '\n'
              << "cliques               " << index.clique_count() << '\n'
              << "total members         " << index.total_members() << '\n'
              << "members per node      " << std::setprecision(6) << per_node << '\n'
              << "effective out-degree  " << degree << '\n'
              << "pseudo-cliques        " << index.pseudo_count() << '\n'
              << "coverage curve        ";
    if (curve.empty()) std::cout << "(not recorded)";
    for (std::size_t i = 0; i < curve.size(); ++i) {
        std::cout << (i ? ", " : "") << "a=" << curve[i].alpha << ":" << curve[i].uncovered_fraction;
    }
    std::cout << '\n';
    return 0;
}

struct SearchArgs {
    std::string index, data, features, queries, predicate = "true";
    std::uint32_t k = 10, l_s = 10;
    double epsilon = 1.0;
    std::uint64_t seed = 0;
    bool rejection = false;
};

int run_search(const SearchArgs& a) {
    Predicate pred;
    try {
        pred = Predicate::parse(a.predicate);
    } catch (const InvalidArgument& e) {
        throw UsageError(e.what());
    }
    SearchParams p;
    p.k = a.k;
    p.l_s = a.l_s;
    p.epsilon = a.epsilon;
    p.rng_seed = a.seed;
    p.seed_mode = a.rejection ? SeedMode::rejection : SeedMode::reservoir;
    try {
        p.validate();
    } catch (const InvalidArgument& e) {
        throw UsageError(e.what());
    }
    const CliqueIndex index = load_index(a.index);
    const Dataset ds = load_dataset(a.data, a.features);
    if (ds.size() != index.size()) {
        throw Error("dataset has " + std::to_string(ds.size()) + " points, index has " + std::to_string(index.size()));
    }
    const VecsMatrix q = read_vecs(a.queries);
    if (q.dim != ds.dim()) throw DimensionError("query dim differs from dataset dim");
    for (std::size_t i = 0; i < q.rows; ++i) {
        Query query{std::vector<float>(q.values.begin() + static_cast<std::ptrdiff_t>(i * q.dim),
                                       q.values.begin() + static_cast<std::ptrdiff_t>((i + 1) * q.dim)),
                    pred};
        const auto res = search(index, ds, query, p);
        std::cout << i << ':';
        for (const auto& nb : res) std::cout << ' ' << nb.id << '/' << nb.distance;
        std::cout << '\n';
    }
    return 0;
}

struct GenArgs {
    std::string data, kind = "mixed-zipf-labels", preset, targets, out, features_out;
    std::size_t queries = 100, per_target = 10, num_labels = 12, k = 10;
    double zipf_s = 1.0, noise = 0.05;
    std::uint32_t label = 0;
    std::uint64_t seed = 1;
};

Workload generate(const GenArgs& a, Dataset& ds) {
    QuerySource qs;
    qs.count = a.queries;
    qs.noise = static_cast<float>(a.noise);
    if (!a.preset.empty()) {
        if (a.preset != "range-paper") throw UsageError("unknown preset `" + a.preset + "`");
        RangeConfig rc;
        rc.targets = preset_range_targets();
        rc.per_target = a.per_target;
        rc.k = a.k;
        rc.seed = a.seed;
        return gen_range_workload(ds, rc, qs);
    }
    WorkloadKind kind{};
    try {
        kind = workload_kind_from_string(a.kind);
    } catch (const InvalidArgument& e) {
        throw UsageError(e.what());
    }
    if (kind == WorkloadKind::fixed_range) {
        RangeConfig rc;
        rc.targets = parse_double_list(a.targets);
        if (rc.targets.empty()) throw UsageError("fixed-range needs --targets");
        rc.per_target = a.per_target;
        rc.k = a.k;
        rc.seed = a.seed;
        return gen_range_workload(ds, rc, qs);
    }
    ZipfLabelConfig zc;
    zc.num_labels = a.num_labels;
    zc.zipf_s = a.zipf_s;
    zc.k = a.k;
    zc.seed = a.seed;
    if (kind == WorkloadKind::fixed_label) zc.fixed_label = a.label;
    return gen_zipf_label_workload(ds, zc, qs);
}

int run_gen(const GenArgs& a) {
    Dataset ds = load_vecs(a.data);
    const Workload w = generate(a, ds);
    save_workload(a.out, w, ds.size());
    double mean = 0.0;
    for (double s : w.selectivities) mean += s;
    if (!w.selectivities.empty()) mean /= static_cast<double>(w.selectivities.size());
    std::cout << json{{"kind", to_string(w.kind)},
                      {"queries", w.queries.size()},
                      {"seed", w.seed},
                      {"mean_selectivity", mean},
                      {"params", json::parse(w.params_json)}}
                     .dump(2)
              << '\n';
    return 0;
}

struct BenchArgs {
    std::string index, data, workload, preset, csv, ls = "10,20,40,80,160", eps = "1", name = "dataset";
    unsigned threads = 1;
    std::size_t repetitions = 3, per_target = 10, k = 10;
    std::uint64_t seed = 1;
};

int run_bench(const BenchArgs& a) {
    if (a.workload.empty() == a.preset.empty()) throw UsageError("give exactly one of --workload or --preset");
    const auto ls = parse_u32_list(a.ls);
    const auto eps = parse_double_list(a.eps);
    if (ls.empty() || eps.empty()) throw UsageError("empty --ls or --epsilon grid");
    std::vector<SearchParams> grid;
    for (double e : eps) {
        for (auto l : ls) {
            SearchParams p;
            p.k = static_cast<std::uint32_t>(a.k);
            p.l_s = l;
            p.epsilon = e;
            try {
                p.validate();
            } catch (const InvalidArgument& ex) {
                throw UsageError(ex.what());
            }
            grid.push_back(p);
        }
    }
    const CliqueIndex index = load_index(a.index);
    Dataset ds = load_vecs(a.data);
    if (ds.size() != index.size()) throw Error("dataset and index sizes differ");
    Workload w;
    if (!a.preset.empty()) {
        GenArgs g;
        g.preset = a.preset;
        g.per_target = a.per_target;
        g.k = a.k;
        g.seed = a.seed;
        w = generate(g, ds);
    } else {
        w = load_workload(a.workload);
        if (w.data_features.size() != ds.size()) throw Error("workload features do not match the dataset size");
        ds.set_features(w.data_features);
    }
    BenchOptions opt;
    opt.threads = a.threads;
    opt.repetitions = a.repetitions;
    opt.dataset_name = a.name;
    const auto rows = bench(index, ds, w, grid, opt);
    if (a.csv.empty() || a.csv == "-") {
        write_csv(std::cout, rows);
    } else {
        std::ofstream out(a.csv);
        if (!out) throw Error("cannot write " + a.csv);
        write_csv(out, rows);
        std::cout << "wrote " << rows.size() << " rows to " << a.csv << '\n';
    }
    return 0;
}

struct UpdateArgs {
    std::string index, data, insert, remove, out, data_out, features;
    double epsilon = 1.0;
    std::uint64_t seed = 0;
};

int run_update(const UpdateArgs& a) {
    if (a.insert.empty() && a.remove.empty()) throw UsageError("nothing to do: give --insert and/or --delete");
    if (!a.insert.empty() && a.data_out.empty()) throw UsageError("--insert needs --data-out");
    CliqueIndex index = load_index(a.index);
    Dataset ds = load_dataset(a.data, a.features);
    if (ds.size() != index.size()) throw Error("dataset and index sizes differ");
    UpdateParams up;
    up.build.k_prime = index.k_prime();
    up.build.tau = index.tau();
    up.epsilon = a.epsilon;
    up.rng_seed = a.seed;
    std::size_t deleted = 0;
    if (!a.remove.empty()) {
        for (NodeId u : load_ids(a.remove)) {
            delete_node(index, ds, u, up);
            ++deleted;
        }
    }
    std::size_t inserted = 0;
    if (!a.insert.empty()) {
        const VecsMatrix m = read_vecs(a.insert);
        if (m.dim != ds.dim()) throw DimensionError("inserted vectors have a different dim");
        for (std::size_t i = 0; i < m.rows; ++i) {
            std::span<const float> v(m.values.data() + i * m.dim, m.dim);
            up.rng_seed = a.seed + i;
            insert_node(index, ds, v, {}, up);
            ++inserted;
        }
        save_fvecs(a.data_out, ds);
    }
    save_index(a.out, index);
    std::cout << json{{"inserted", inserted},
                      {"deleted", deleted},
                      {"n", index.size()},
                      {"live", index.live_count()},
                      {"cliques", index.clique_count()}}
                     .dump(2)
              << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Maximal clique index for filtered nearest-neighbor search"};
    app.require_subcommand(1);

    BuildArgs ba;
    auto* build_cmd = app.add_subcommand("build", "Build an index from a vecs dataset");
    build_cmd->add_option("--data", ba.data, "Dataset (.fvecs/.bvecs/.ivecs)")->required()->check(CLI::ExistingFile);
    build_cmd->add_option("--features", ba.features, "Plain-text features file");
    build_cmd->add_option("--out", ba.out, "Index output path")->required();
    build_cmd->add_option("--k-prime", ba.k_prime, "Neighbors per node in the k'-NN graph")->capture_default_str();
    build_cmd->add_option("--tau", ba.tau, "Minimum clique size")->capture_default_str();
    build_cmd->add_option("--alpha0", ba.alpha0, "Initial densification factor")->capture_default_str();
    build_cmd->add_option("--alpha-expansion", ba.expansion, "Per-round alpha multiplier")->capture_default_str();
    build_cmd->add_option("--alpha-max", ba.alpha_max, "Alpha at which pseudo-cliques are allowed")->capture_default_str();
    build_cmd->add_option("--supercenter-fraction", ba.supercenter, "Super-center cap as a fraction of n")
        ->capture_default_str();
    build_cmd->add_option("--knng", ba.knng, "k'-NN graph method")
        ->check(CLI::IsMember({"auto", "exact", "nn-descent"}))
        ->capture_default_str();
    build_cmd->add_option("--nnd-iterations", ba.nnd_iterations, "NN-Descent iterations")->capture_default_str();
    build_cmd->add_option("--threads", ba.threads, "Worker threads")->capture_default_str();

    StatsArgs sa;
    auto* stats_cmd = app.add_subcommand("stats", "Summarize an index");
    stats_cmd->add_option("--index", sa.index, "Index file")->required()->check(CLI::ExistingFile);
    stats_cmd->add_flag("--json", sa.as_json, "Print JSON");

    SearchArgs qa;
    auto* search_cmd = app.add_subcommand("search", "Run filtered queries from a vecs file");
    search_cmd->add_option("--index", qa.index, "Index file")->required()->check(CLI::ExistingFile);
    search_cmd->add_option("--data", qa.data, "Dataset")->required()->check(CLI::ExistingFile);
    search_cmd->add_option("--features", qa.features, "Plain-text features file");
    search_cmd->add_option("--queries", qa.queries, "Query vectors (.fvecs)")->required()->check(CLI::ExistingFile);
    search_cmd->add_option("--predicate", qa.predicate, "`true`, `range L R` or `label X`")->capture_default_str();
    search_cmd->add_option("-k,--k", qa.k, "Results per query")->capture_default_str();
    search_cmd->add_option("--ls", qa.l_s, "Beam width")->capture_default_str();
    search_cmd->add_option("--epsilon", qa.epsilon, "Seed scale: ceil(eps * sqrt(n)) seeds")->capture_default_str();
    search_cmd->add_option("--seed", qa.seed, "RNG seed")->capture_default_str();
    search_cmd->add_flag("--rejection", qa.rejection, "Test the predicate lazily instead of precomputing a mask");

    GenArgs ga;
    auto* gen_cmd = app.add_subcommand("gen-workload", "Generate a workload with ground truth");
    gen_cmd->add_option("--data", ga.data, "Dataset")->required()->check(CLI::ExistingFile);
    gen_cmd->add_option("--out", ga.out, "Workload output path")->required();
    gen_cmd->add_option("--kind", ga.kind, "mixed-zipf-labels, fixed-range or fixed-label")->capture_default_str();
    gen_cmd->add_option("--preset", ga.preset, "range-paper");
    gen_cmd->add_option("--targets", ga.targets, "Comma-separated range selectivities");
    gen_cmd->add_option("--per-target", ga.per_target, "Queries per range target")->capture_default_str();
    gen_cmd->add_option("--queries", ga.queries, "Label queries")->capture_default_str();
    gen_cmd->add_option("--num-labels", ga.num_labels, "Zipf label count")->capture_default_str();
    gen_cmd->add_option("--zipf-s", ga.zipf_s, "Zipf exponent")->capture_default_str();
    gen_cmd->add_option("--label", ga.label, "Label for fixed-label workloads")->capture_default_str();
    gen_cmd->add_option("--noise", ga.noise, "Query jitter in per-coordinate standard deviations")
        ->capture_default_str();
    gen_cmd->add_option("-k,--k", ga.k, "Ground-truth depth")->capture_default_str();
    gen_cmd->add_option("--seed", ga.seed, "RNG seed")->capture_default_str();

    BenchArgs be;
    auto* bench_cmd = app.add_subcommand("bench", "Recall / QPS over a parameter grid");
    bench_cmd->add_option("--index", be.index, "Index file")->required()->check(CLI::ExistingFile);
    bench_cmd->add_option("--data", be.data, "Dataset")->required()->check(CLI::ExistingFile);
    bench_cmd->add_option("--workload", be.workload, "Workload file")->check(CLI::ExistingFile);
    bench_cmd->add_option("--preset", be.preset, "range-paper");
    bench_cmd->add_option("--per-target", be.per_target, "Preset queries per target")->capture_default_str();
    bench_cmd->add_option("--ls", be.ls, "Comma-separated beam widths")->capture_default_str();
    bench_cmd->add_option("--epsilon", be.eps, "Comma-separated seed scales")->capture_default_str();
    bench_cmd->add_option("-k,--k", be.k, "Results per query")->capture_default_str();
    bench_cmd->add_option("--threads", be.threads, "Query threads")->capture_default_str();
    bench_cmd->add_option("--repetitions", be.repetitions, "Timed runs per grid point")->capture_default_str();
    bench_cmd->add_option("--name", be.name, "Dataset name for the CSV")->capture_default_str();
    bench_cmd->add_option("--seed", be.seed, "Preset RNG seed")->capture_default_str();
    bench_cmd->add_option("--csv", be.csv, "CSV output path (default stdout)");

    UpdateArgs ua;
    auto* update_cmd = app.add_subcommand("update", "Insert and delete points");
    update_cmd->add_option("--index", ua.index, "Index file")->required()->check(CLI::ExistingFile);
    update_cmd->add_option("--data", ua.data, "Dataset")->required()->check(CLI::ExistingFile);
    update_cmd->add_option("--features", ua.features, "Plain-text features file");
    update_cmd->add_option("--insert", ua.insert, "Vectors to insert (.fvecs)")->check(CLI::ExistingFile);
    update_cmd->add_option("--delete", ua.remove, "Ids to delete (.ivecs or text)")->check(CLI::ExistingFile);
    update_cmd->add_option("--out", ua.out, "Updated index path")->required();
    update_cmd->add_option("--data-out", ua.data_out, "Updated dataset path");
    update_cmd->add_option("--epsilon", ua.epsilon, "Seed scale for neighbor retrieval")->capture_default_str();
    update_cmd->add_option("--seed", ua.seed, "RNG seed")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        if (*build_cmd) return run_build(ba);
        if (*stats_cmd) return run_stats(sa);
        if (*search_cmd) return run_search(qa);
        if (*gen_cmd) return run_gen(ga);
        if (*bench_cmd) return run_bench(be);
        if (*update_cmd) return run_update(ua);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 1;
}
