#include "pdag/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <numeric>
#include <optional>
#include <sstream>

#include "CLI11.hpp"

#include "pdag/evaluate.hpp"
#include "pdag/graph.hpp"
#include "pdag/io.hpp"
#include "pdag/optimizer.hpp"
#include "pdag/simulate.hpp"

namespace pdag::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

/// Flag-level problems found after parsing.
class UsageError : public Error {
public:
    using Error::Error;
};

struct CommonFit {
    std::string data;
    std::string partition;
    double tol = 1e-4;
    int max_sweeps = 1000;
    int threads = 1;
    bool no_center = false;
    std::string out_dir;
};

void add_common(CLI::App* cmd, CommonFit& c) {
    cmd->add_option("--data", c.data, "CSV with a header row of variable names")->required();
    cmd->add_option("--partition", c.partition,
                    "Partition file: one block per line, comma separated names, upstream first "
                    "(default: a single block)");
    cmd->add_option("--tol", c.tol, "Sup-norm convergence threshold")->capture_default_str();
    cmd->add_option("--max-sweeps", c.max_sweeps, "Sweep limit per block row")->capture_default_str();
    cmd->add_option("--threads", c.threads, "Worker threads")->capture_default_str();
    cmd->add_flag("--no-center", c.no_center, "Do not center columns (data already has mean 0)");
    cmd->add_option("--out-dir", c.out_dir, "Output directory")->required();
}

struct Problem {
    io::DataTable table;
    SampleCovariance covariance;
    Partition partition;
};

Problem load_problem(const CommonFit& c) {
    if (c.tol <= 0.0) throw UsageError("--tol must be > 0");
    if (c.max_sweeps < 1) throw UsageError("--max-sweeps must be >= 1");
    if (c.threads < 1) throw UsageError("--threads must be >= 1");
    io::DataTable table = io::read_csv(c.data);
    SampleCovariance s = compute_covariance(table.values, !c.no_center, table.names);
    Partition partition = c.partition.empty()
                              ? Partition::single_block(table.names.size())
                              : partition_from_names(io::read_partition_file(c.partition), table.names);
    return {std::move(table), std::move(s), std::move(partition)};
}

json partition_json(const Partition& partition, const std::vector<std::string>& names) {
    json blocks = json::array();
    for (const auto& block : partition.blocks()) {
        json b = json::array();
        for (std::size_t v : block) b.push_back(names[v]);
        blocks.push_back(b);
    }
    return blocks;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

json block_timings(const FitResult& f) {
    json out = json::array();
    for (const auto& b : f.blocks) out.push_back({{"block", b.block + 1}, {"seconds", b.seconds}});
    return out;
}

int cmd_fit(const CommonFit& c, std::optional<double> lambda, std::optional<double> target,
            double density_tol, std::ostream& out) {
    const auto start = std::chrono::steady_clock::now();
    if (lambda.has_value() == target.has_value())
        throw UsageError("exactly one of --lambda and --target-density is required");
    if (lambda && *lambda < 0.0) throw UsageError("--lambda must be >= 0");
    const Problem prob = load_problem(c);
    const auto& names = prob.table.names;

    FitOptions options;
    options.tol = c.tol;
    options.max_sweeps = c.max_sweeps;
    options.thread_count = c.threads;

    json summary;
    summary["variables"] = names;
    summary["observations"] = prob.table.values.rows();
    summary["partition"] = partition_json(prob.partition, names);

    std::optional<FitResult> result;
    if (lambda) {
        options.lambda = *lambda;
        result.emplace(fit(prob.covariance, prob.partition, options));
    } else {
        if (!(*target >= 0.0 && *target < 1.0)) throw UsageError("--target-density must lie in [0, 1)");
        DensitySelection sel =
            select_lambda_for_density(prob.covariance, prob.partition, *target, density_tol, options);
        options.lambda = sel.lambda;
        summary["density_search"] = {{"target", *target},
                                     {"tolerance", density_tol},
                                     {"within_tolerance", sel.within_tolerance},
                                     {"iterations", sel.iterations}};
        if (!sel.within_tolerance)
            out << "warning: density " << sel.density << " is outside " << *target << " +/- " << density_tol
                << "\n";
        result.emplace(std::move(sel.fit));
    }
    summary["options"] = io::options_json(options, !c.no_center);
    summary["result"] = io::fit_json(*result, names);

    const fs::path dir(c.out_dir);
    io::write_edges_tsv(dir / "edges.tsv", edges_of(result->estimate), names);
    io::write_json(dir / "summary.json", summary);
    io::write_json(dir / "timings.json", {{"threads", c.threads},
                                          {"blocks", block_timings(*result)},
                                          {"total_seconds", seconds_since(start)}});
    out << "lambda " << io::format_weight(result->lambda) << ", " << result->estimate.edge_count()
        << " edges, density " << io::format_weight(edge_density(result->estimate))
        << (result->converged ? "" : " (not converged)") << "\n";
    return 0;
}

int cmd_path(const CommonFit& c, std::size_t grid_size, std::ostream& out) {
    const auto start = std::chrono::steady_clock::now();
    if (grid_size < 2) throw UsageError("--grid-size must be >= 2");
    const Problem prob = load_problem(c);
    const auto& names = prob.table.names;
    FitOptions options;
    options.tol = c.tol;
    options.max_sweeps = c.max_sweeps;
    options.thread_count = c.threads;

    const auto grid = penalty_grid(prob.covariance, prob.partition, grid_size, options);
    const FitPath path = fit_path(prob.covariance, prob.partition, grid, options);

    const fs::path dir(c.out_dir);
    const int digits = static_cast<int>(std::to_string(grid_size).size());
    json points = json::array();
    json timings = json::array();
    for (std::size_t k = 0; k < path.fits.size(); ++k) {
        char name[64];
        std::snprintf(name, sizeof name, "edges_%0*zu.tsv", digits, k + 1);
        io::write_edges_tsv(dir / name, edges_of(path.fits[k].estimate), names);
        json point = io::fit_json(path.fits[k], names);
        point["file"] = name;
        points.push_back(point);
        timings.push_back(block_timings(path.fits[k]));
    }
    FitOptions recorded = options;
    recorded.lambda = 0.0;
    json opts = io::options_json(recorded, !c.no_center);
    opts.erase("lambda");
    io::write_json(dir / "path.json", {{"variables", names},
                                       {"observations", prob.table.values.rows()},
                                       {"partition", partition_json(prob.partition, names)},
                                       {"options", opts},
                                       {"grid_size", grid_size},
                                       {"lambdas", path.lambdas},
                                       {"points", points}});
    io::write_json(dir / "timings.json",
                   {{"threads", c.threads}, {"points", timings}, {"total_seconds", seconds_since(start)}});
    out << grid_size << " fits, lambda " << io::format_weight(grid.front()) << " .. "
        << io::format_weight(grid.back()) << ", edges " << path.fits.front().estimate.edge_count() << " .. "
        << path.fits.back().estimate.edge_count() << "\n";
    return 0;
}

struct Source {
    std::string network;
    std::vector<double> random;  // p, sparsity
};

void add_source(CLI::App* cmd, Source& s) {
    auto* net = cmd->add_option("--network", s.network, "True network edge list ('parent child' per line)");
    auto* rnd = cmd->add_option("--random", s.random, "Random DAG: P SPARSITY")->expected(2);
    net->excludes(rnd);
}

struct ResolvedSource {
    std::size_t p = 0;
    std::vector<std::string> names;
    std::optional<std::vector<Edge>> edges;
    double sparsity = 0.95;
};

ResolvedSource resolve_source(const Source& s) {
    ResolvedSource out;
    if (!s.network.empty()) {
        io::NamedEdges net = io::read_edge_list(s.network);
        out.p = net.names.size();
        out.names = std::move(net.names);
        out.edges = std::move(net.edges);
        return out;
    }
    if (s.random.size() != 2) throw UsageError("one of --network or --random P SPARSITY is required");
    if (s.random[0] < 2 || s.random[0] != static_cast<double>(static_cast<std::size_t>(s.random[0])))
        throw UsageError("--random P must be an integer >= 2");
    out.p = static_cast<std::size_t>(s.random[0]);
    out.sparsity = s.random[1];
    if (!(out.sparsity > 0.0 && out.sparsity < 1.0)) throw UsageError("--random SPARSITY must lie in (0, 1)");
    out.names = default_names(out.p);
    return out;
}

std::vector<std::size_t> parse_sizes(const std::string& text) {
    std::vector<std::size_t> sizes;
    std::stringstream in(text);
    for (std::string item; std::getline(in, item, ',');) {
        std::size_t used = 0;
        long v = 0;
        try {
            v = std::stol(item, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != item.size() || v < 1) throw UsageError("bad block size '" + item + "'");
        sizes.push_back(static_cast<std::size_t>(v));
    }
    return sizes;
}

std::vector<std::size_t> equal_sizes(std::size_t p, std::size_t k) {
    if (k < 1 || k > p) throw UsageError("equal=K needs 1 <= K <= p");
    std::vector<std::size_t> sizes(k, p / k);
    for (std::size_t r = 0; r < p % k; ++r) ++sizes[k - 1 - r];
    return sizes;
}

// LABEL:s1,s2,...  |  LABEL:equal=K  |  LABEL:file=PATH
PartitionSpec parse_partition_spec(const std::string& text, const ResolvedSource& src) {
    const auto colon = text.find(':');
    if (colon == std::string::npos || colon == 0)
        throw UsageError("partition spec '" + text + "' must look like LABEL:SIZES, LABEL:equal=K or LABEL:file=PATH");
    PartitionSpec spec;
    spec.label = text.substr(0, colon);
    const std::string body = text.substr(colon + 1);
    if (body.rfind("equal=", 0) == 0) {
        spec.sizes = equal_sizes(src.p, parse_sizes(body.substr(6)).at(0));
    } else if (body.rfind("file=", 0) == 0) {
        spec.blocks = partition_from_names(io::read_partition_file(body.substr(5)), src.names).blocks();
    } else {
        spec.sizes = parse_sizes(body);
        if (std::accumulate(spec.sizes.begin(), spec.sizes.end(), std::size_t{0}) != src.p)
            throw UsageError("partition '" + spec.label + "' sizes do not sum to " + std::to_string(src.p));
    }
    return spec;
}

std::vector<std::size_t> parse_n_list(const std::vector<std::string>& items) {
    std::vector<std::size_t> out;
    for (const auto& item : items)
        for (std::size_t n : parse_sizes(item)) {
            if (n < 2) throw UsageError("sample sizes must be >= 2");
            out.push_back(n);
        }
    if (out.empty()) throw UsageError("--n needs at least one sample size");
    return out;
}

struct SimulateArgs {
    Source source;
    std::vector<std::string> n;
    std::size_t reps = 20;
    std::vector<std::string> partitions;
    std::size_t grid_size = 30;
    std::uint64_t seed = 1;
    int threads = 1;
    double tol = 1e-4;
    int max_sweeps = 1000;
    bool timing = false;
    std::string out_dir;
};

int cmd_simulate(const SimulateArgs& a, std::ostream& out) {
    const auto start = std::chrono::steady_clock::now();
    const ResolvedSource src = resolve_source(a.source);
    if (a.partitions.empty()) throw UsageError("at least one --partition is required");
    if (a.reps < 1) throw UsageError("--reps must be >= 1");
    if (a.grid_size < 2) throw UsageError("--grid-size must be >= 2");
    if (a.threads < 1) throw UsageError("--threads must be >= 1");

    ExperimentConfig config;
    config.replications = a.reps;
    config.n_list = parse_n_list(a.n);
    config.network = src.edges;
    config.p = src.p;
    config.sparsity = src.sparsity;
    config.names = src.names;
    for (const auto& text : a.partitions) config.partitions.push_back(parse_partition_spec(text, src));
    config.grid_size = a.grid_size;
    config.seed = a.seed;
    config.threads = a.threads;
    config.tol = a.tol;
    config.max_sweeps = a.max_sweeps;

    const ExperimentReport report = experiment(config);
    const fs::path dir(a.out_dir);
    json j = io::experiment_json(report, false);
    json parts = json::array();
    for (const auto& spec : config.partitions) parts.push_back({{"label", spec.label}, {"sizes", spec.sizes}});
    j["partitions"] = parts;
    j["options"] = {{"tol", a.tol}, {"max_sweeps", a.max_sweeps}, {"center", true}};
    j["n_list"] = config.n_list;
    io::write_json(dir / "report.json", j);
    const std::string table = io::experiment_table(report);
    io::write_text(dir / "report.txt", table);
    if (a.timing) {
        json t = io::experiment_json(report, true);
        t["threads"] = a.threads;
        t["total_seconds"] = seconds_since(start);
        io::write_json(dir / "timings.json", t);
    }
    out << table;
    return 0;
}

struct SampleArgs {
    Source source;
    std::size_t n = 100;
    std::uint64_t seed = 1;
    std::size_t blocks = 0;
    std::string out;
    std::string truth_out;
    std::string partition_out;
};

int cmd_sample(const SampleArgs& a, std::ostream& out) {
    const ResolvedSource src = resolve_source(a.source);
    if (a.n < 2) throw UsageError("--n must be >= 2");
    const std::vector<Edge> edges =
        src.edges ? *src.edges : random_dag(src.p, src.sparsity, derive_seed(a.seed, 0, 0, 1));
    const TrueModel truth = cholesky_from_dag(src.p, edges, derive_seed(a.seed, 0, 0, 2));
    io::write_csv(a.out, {src.names, sample_observations(truth, a.n, derive_seed(a.seed, 1, 0))});
    if (!a.truth_out.empty()) {
        std::ostringstream text;
        for (const auto& e : truth.edges)
            text << src.names[e.parent] << '\t' << src.names[e.child] << '\t' << io::format_weight(e.weight) << '\n';
        io::write_text(a.truth_out, text.str());
    }
    if (!a.partition_out.empty()) {
        if (a.blocks < 1) throw UsageError("--partition-out needs --blocks K");
        PartitionSpec spec{"blocks", equal_sizes(src.p, a.blocks), {}};
        const Partition part = spec.resolve(truth.topological_order);
        std::vector<std::vector<std::string>> named;
        for (const auto& block : part.blocks()) {
            named.emplace_back();
            for (std::size_t v : block) named.back().push_back(src.names[v]);
        }
        io::write_partition_file(a.partition_out, named);
    }
    out << a.n << " observations of " << src.p << " variables, " << truth.edges.size() << " true edges\n";
    return 0;
}

struct EvalArgs {
    std::vector<std::string> estimates;
    std::vector<std::string> labels;
    std::string truth;
    std::string known;
    std::string variables;
    std::string out;
};

CholeskyFactor factor_from_edges(std::size_t p, const std::vector<Edge>& edges) {
    Matrix b = Matrix::Identity(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p));
    for (const auto& e : edges)
        b(static_cast<Eigen::Index>(e.child), static_cast<Eigen::Index>(e.parent)) = e.weight == 0.0 ? 1.0 : e.weight;
    return CholeskyFactor(std::move(b), Partition::single_block(p));
}

int cmd_eval(const EvalArgs& a, std::ostream& out) {
    if (a.truth.empty() == a.known.empty()) throw UsageError("exactly one of --truth and --known is required");
    if (a.estimates.empty()) throw UsageError("at least one --estimate is required");
    if (!a.labels.empty() && a.labels.size() != a.estimates.size())
        throw UsageError("--label must be given once per --estimate");

    std::vector<std::string> names;
    if (!a.variables.empty()) {
        names = io::read_variable_names(a.variables);
    } else {
        if (!a.truth.empty()) throw UsageError("--truth needs --variables to fix the full variable set");
        std::vector<std::string> files{a.known};
        files.insert(files.end(), a.estimates.begin(), a.estimates.end());
        for (const auto& f : files)
            for (auto& n : io::read_edge_list(f).names)
                if (std::find(names.begin(), names.end(), n) == names.end()) names.push_back(n);
    }
    const std::size_t p = names.size();

    std::vector<CholeskyFactor> estimates;
    for (const auto& f : a.estimates) {
        try {
            estimates.push_back(factor_from_edges(p, io::read_edge_list(f, names).edges));
        } catch (const InvariantError& e) {
            throw InputError("estimate '" + f + "': " + e.what());
        }
    }

    json report;
    report["variables"] = names;
    report["estimates"] = a.estimates;
    if (!a.truth.empty()) {
        const auto truth = io::read_edge_list(a.truth, names);
        const PairLabels truth_labels = classify_edges(p, truth.edges);
        std::vector<PairLabels> preds;
        for (const auto& e : estimates) preds.push_back(classify_pairs(e));
        const AucReport auc = auc_ma_report(std::span<const PairLabels>(preds), truth_labels);
        report["auc"] = io::auc_json(auc);
        for (const auto& w : auc.warnings) out << "warning: " << w << "\n";
        if (auc.defined)
            out << "AUC-MA " << io::format_weight(auc.value) << "\n";
        else
            out << "AUC-MA undefined\n";
        for (const auto& c : auc.curves)
            if (c.defined) out << "  " << to_string(c.cls) << " " << io::format_weight(c.auc_normalized) << "\n";
    } else {
        const auto known = io::read_edge_list(a.known, names);
        std::vector<std::pair<std::string, KnownEdgeAudit>> audits;
        json list = json::array();
        for (std::size_t k = 0; k < estimates.size(); ++k) {
            const std::string label = a.labels.empty() ? fs::path(a.estimates[k]).stem().string() : a.labels[k];
            audits.emplace_back(label, audit_known_edges(estimates[k], known.edges));
            json j = io::audit_json(audits.back().second, names);
            j["label"] = label;
            list.push_back(j);
        }
        report["audits"] = list;
        out << io::audit_table(names, known.edges, audits);
    }
    if (!a.out.empty()) io::write_json(a.out, report);
    return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Partition-DAG: sparse Cholesky / DAG estimation under partial orderings", "pdag"};
    app.require_subcommand(1);

    CommonFit fit_args;
    std::optional<double> lambda;
    std::optional<double> target;
    double density_tol = 0.02;
    auto* fit_cmd = app.add_subcommand("fit", "Fit one penalty (or a target edge density)");
    add_common(fit_cmd, fit_args);
    auto* lam = fit_cmd->add_option("--lambda", lambda, "Penalty");
    auto* dens = fit_cmd->add_option("--target-density", target, "Choose the penalty for this edge density");
    lam->excludes(dens);
    fit_cmd->add_option("--density-tolerance", density_tol, "Accepted |density - target|")->capture_default_str();

    CommonFit path_args;
    std::size_t grid_size = 30;
    auto* path_cmd = app.add_subcommand("path", "Fit a descending penalty grid from empty to near-dense");
    add_common(path_cmd, path_args);
    path_cmd->add_option("--grid-size", grid_size, "Number of penalties")->capture_default_str();

    SimulateArgs sim;
    auto* sim_cmd = app.add_subcommand("simulate", "Simulation study scored by AUC-MA");
    add_source(sim_cmd, sim.source);
    sim_cmd->add_option("--n", sim.n, "Sample sizes (comma separated or repeated)")->required();
    sim_cmd->add_option("--reps", sim.reps, "Replications per sample size")->capture_default_str();
    sim_cmd->add_option("--partition", sim.partitions,
                        "LABEL:SIZES (block sizes along the true topological order), LABEL:equal=K or "
                        "LABEL:file=PATH; repeatable")
        ->required();
    sim_cmd->add_option("--grid-size", sim.grid_size, "Penalties per path")->capture_default_str();
    sim_cmd->add_option("--seed", sim.seed, "Master seed")->capture_default_str();
    sim_cmd->add_option("--threads", sim.threads, "Concurrent replications")->capture_default_str();
    sim_cmd->add_option("--tol", sim.tol, "Sup-norm convergence threshold")->capture_default_str();
    sim_cmd->add_option("--max-sweeps", sim.max_sweeps, "Sweep limit per block row")->capture_default_str();
    sim_cmd->add_flag("--timing", sim.timing, "Also write timings.json");
    sim_cmd->add_option("--out-dir", sim.out_dir, "Output directory")->required();

    SampleArgs smp;
    auto* smp_cmd = app.add_subcommand("sample", "Write a synthetic data set drawn from a true network");
    add_source(smp_cmd, smp.source);
    smp_cmd->add_option("--n", smp.n, "Observations")->capture_default_str();
    smp_cmd->add_option("--seed", smp.seed, "Seed")->capture_default_str();
    smp_cmd->add_option("--out", smp.out, "Data CSV")->required();
    smp_cmd->add_option("--truth-out", smp.truth_out, "True edge list");
    smp_cmd->add_option("--blocks", smp.blocks, "Equal blocks along the true order for --partition-out");
    smp_cmd->add_option("--partition-out", smp.partition_out, "Partition file");

    EvalArgs ev;
    auto* eval_cmd = app.add_subcommand("eval", "AUC-MA against a true network, or a known-edge audit");
    eval_cmd->add_option("--estimate", ev.estimates, "Estimated edges.tsv; repeat for a penalty path")->required();
    eval_cmd->add_option("--label", ev.labels, "Column label per estimate (audit)");
    eval_cmd->add_option("--truth", ev.truth, "True edge list");
    eval_cmd->add_option("--known", ev.known, "Known edges to audit");
    eval_cmd->add_option("--variables", ev.variables, "Data CSV (header) or names file");
    eval_cmd->add_option("--out", ev.out, "JSON report");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*fit_cmd) return cmd_fit(fit_args, lambda, target, density_tol, out);
        if (*path_cmd) return cmd_path(path_args, grid_size, out);
        if (*sim_cmd) return cmd_simulate(sim, out);
        if (*smp_cmd) return cmd_sample(smp, out);
        if (*eval_cmd) return cmd_eval(ev, out);
    } catch (const UsageError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const InputError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const DegenerateDataError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}

}  // namespace pdag::cli
