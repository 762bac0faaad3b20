#include "pdag/simulate.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <numeric>
#include <sstream>

#include "pdag/evaluate.hpp"

namespace pdag {

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t replication, std::uint64_t n_index,
                          std::uint64_t stream) {
    auto lo = [](std::uint64_t v) { return static_cast<std::uint32_t>(v & 0xffffffffu); };
    auto hi = [](std::uint64_t v) { return static_cast<std::uint32_t>(v >> 32); };
    std::seed_seq seq{lo(master), hi(master), lo(replication), hi(replication),
                      lo(n_index), hi(n_index), lo(stream), hi(stream)};
    std::array<std::uint32_t, 2> out{};
    seq.generate(out.begin(), out.end());
    return (static_cast<std::uint64_t>(out[1]) << 32) | out[0];
}

TrueModel cholesky_from_dag(std::size_t p, const std::vector<Edge>& edges, std::uint64_t seed) {
    if (auto cycle = find_cycle(p, edges)) {
        std::ostringstream msg;
        msg << "true network is cyclic:";
        for (std::size_t v : *cycle) msg << ' ' << v + 1 << " ->";
        msg << ' ' << cycle->front() + 1;
        throw InputError(msg.str());
    }
    std::vector<Edge> sorted = edges;
    std::sort(sorted.begin(), sorted.end(), [](const Edge& a, const Edge& b) {
        return a.parent != b.parent ? a.parent < b.parent : a.child < b.child;
    });
    sorted.erase(std::unique(sorted.begin(), sorted.end(),
                             [](const Edge& a, const Edge& b) {
                                 return a.parent == b.parent && a.child == b.child;
                             }),
                 sorted.end());

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> magnitude(0.3, 0.7);
    std::bernoulli_distribution negative(0.5);
    Matrix b = Matrix::Identity(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p));
    for (auto& e : sorted) {
        const double m = magnitude(rng);
        e.weight = negative(rng) ? -m : m;
        b(static_cast<Eigen::Index>(e.child), static_cast<Eigen::Index>(e.parent)) = e.weight;
    }
    auto order = topological_order(p, sorted);
    return TrueModel{CholeskyFactor(std::move(b), Partition::single_block(p)), std::move(sorted),
                     std::move(*order), seed};
}

std::vector<Edge> random_dag(std::size_t p, double sparsity, std::uint64_t seed) {
    if (!(sparsity > 0.0 && sparsity < 1.0)) throw InputError("sparsity must lie in (0, 1)");
    std::mt19937_64 rng(seed);
    std::vector<std::size_t> order(p);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    std::bernoulli_distribution present(1.0 - sparsity);
    std::vector<Edge> edges;
    for (std::size_t a = 0; a < p; ++a)
        for (std::size_t b = a + 1; b < p; ++b)
            if (present(rng)) edges.push_back({order[a], order[b], 1.0});
    std::sort(edges.begin(), edges.end(), [](const Edge& x, const Edge& y) {
        return x.parent != y.parent ? x.parent < y.parent : x.child < y.child;
    });
    return edges;
}

Matrix sample_observations(const TrueModel& model, std::size_t n, std::uint64_t seed) {
    if (n < 1) throw InputError("need at least one observation");
    const std::size_t p = model.b_true.size();
    std::vector<std::vector<std::pair<std::size_t, double>>> parents(p);
    for (const auto& e : model.edges) parents[e.child].emplace_back(e.parent, e.weight);

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
    std::vector<double> z(p);
    for (std::size_t row = 0; row < n; ++row) {
        for (auto& v : z) v = normal(rng);
        const auto r = static_cast<Eigen::Index>(row);
        for (std::size_t v : model.topological_order) {
            double acc = z[v];
            for (const auto& [parent, weight] : parents[v])
                acc -= weight * x(r, static_cast<Eigen::Index>(parent));
            x(r, static_cast<Eigen::Index>(v)) = acc / model.b_true(v, v);
        }
    }
    return x;
}

Partition PartitionSpec::resolve(const std::vector<std::size_t>& order) const {
    const std::size_t p = order.size();
    if (!blocks.empty()) return Partition(blocks, p);
    if (std::accumulate(sizes.begin(), sizes.end(), std::size_t{0}) != p)
        throw InputError("partition '" + label + "' block sizes do not sum to " + std::to_string(p));
    std::vector<std::vector<std::size_t>> out;
    std::size_t at = 0;
    for (std::size_t size : sizes) {
        out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(at),
                         order.begin() + static_cast<std::ptrdiff_t>(at + size));
        at += size;
    }
    return Partition(std::move(out), p);
}

const ExperimentCell& ExperimentReport::cell(const std::string& partition, std::size_t n) const {
    for (const auto& c : cells)
        if (c.partition == partition && c.n == n) return c;
    throw InputError("no experiment cell for partition '" + partition + "' and n = " + std::to_string(n));
}

ExperimentReport experiment(const ExperimentConfig& config) {
    if (config.replications < 1) throw InputError("need at least one replication");
    if (config.n_list.empty()) throw InputError("need at least one sample size");
    if (config.partitions.empty()) throw InputError("need at least one partition");

    std::size_t p = config.p;
    std::vector<Edge> network;
    if (config.network) {
        network = *config.network;
    } else {
        network = random_dag(p, config.sparsity, derive_seed(config.seed, 0, 0, 1));
    }
    if (p < 2) throw InputError("experiment needs at least 2 variables");
    const TrueModel truth = cholesky_from_dag(p, network, derive_seed(config.seed, 0, 0, 2));
    const PairLabels truth_labels = classify_pairs(truth.b_true);

    std::vector<Partition> partitions;
    for (const auto& spec : config.partitions) partitions.push_back(spec.resolve(truth.topological_order));

    const std::size_t n_count = config.n_list.size();
    const std::size_t parts = partitions.size();
    const std::size_t tasks = config.replications * n_count;
    // results[task][partition]
    std::vector<std::vector<double>> aucs(tasks, std::vector<double>(parts, 0.0));
    std::vector<std::vector<double>> secs(tasks, std::vector<double>(parts, 0.0));
    std::vector<std::exception_ptr> errors(tasks);

    FitOptions options;
    options.tol = config.tol;
    options.max_sweeps = config.max_sweeps;
    options.thread_count = 1;

    const auto task_count = static_cast<long>(tasks);
#pragma omp parallel for schedule(dynamic, 1) num_threads(std::max(1, config.threads))
    for (long t = 0; t < task_count; ++t) {
        const auto task = static_cast<std::size_t>(t);
        const std::size_t rep = task / n_count;
        const std::size_t ni = task % n_count;
        try {
            const Matrix data = sample_observations(truth, config.n_list[ni], derive_seed(config.seed, rep + 1, ni));
            const SampleCovariance s = compute_covariance(data, config.center);
            for (std::size_t k = 0; k < parts; ++k) {
                const auto start = std::chrono::steady_clock::now();
                const auto grid = penalty_grid(s, partitions[k], config.grid_size, options);
                const FitPath path = fit_path(s, partitions[k], grid, options);
                secs[task][k] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
                const auto report = auc_ma_report(path, truth_labels);
                aucs[task][k] = report.defined ? report.value : std::numeric_limits<double>::quiet_NaN();
            }
        } catch (...) {
            errors[task] = std::current_exception();
        }
    }
    for (const auto& err : errors)
        if (err) std::rethrow_exception(err);

    ExperimentReport report;
    report.p = p;
    report.true_edges = truth.edges.size();
    report.seed = config.seed;
    report.replications = config.replications;
    report.grid_size = config.grid_size;
    for (std::size_t k = 0; k < parts; ++k) {
        for (std::size_t ni = 0; ni < n_count; ++ni) {
            ExperimentCell cell;
            cell.partition = config.partitions[k].label;
            cell.n = config.n_list[ni];
            double sum = 0.0;
            double sum_sq = 0.0;
            std::size_t defined = 0;
            double time_sum = 0.0;
            for (std::size_t rep = 0; rep < config.replications; ++rep) {
                const double a = aucs[rep * n_count + ni][k];
                cell.auc.push_back(a);
                cell.seconds.push_back(secs[rep * n_count + ni][k]);
                time_sum += cell.seconds.back();
                if (std::isnan(a)) continue;
                sum += a;
                sum_sq += a * a;
                ++defined;
            }
            if (defined) {
                cell.mean_auc = sum / static_cast<double>(defined);
                const double var = defined > 1 ? (sum_sq - sum * sum / static_cast<double>(defined)) /
                                                     static_cast<double>(defined - 1)
                                               : 0.0;
                cell.sd_auc = std::sqrt(std::max(0.0, var));
            } else {
                cell.mean_auc = std::numeric_limits<double>::quiet_NaN();
            }
            cell.mean_seconds = time_sum / static_cast<double>(config.replications);
            report.cells.push_back(std::move(cell));
        }
    }
    return report;
}

}  // namespace pdag
