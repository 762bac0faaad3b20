// Wall-clock comparison of the serial reference solver and the block-parallel kernel
// on the random-DAG setup: p nodes split into four equal groups along the true order,
// merged into 2, 3 or 4 blocks.

#include <chrono>
#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "pdag/optimizer.hpp"
#include "pdag/reference.hpp"
#include "pdag/simulate.hpp"

namespace {

template <class F>
double time_it(F&& f, int repeats) {
    double best = 1e300;
    for (int r = 0; r < repeats; ++r) {
        const auto start = std::chrono::steady_clock::now();
        f();
        best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
    }
    return best;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Partition-DAG kernel benchmark"};
    std::size_t p = 100;
    std::size_t n = 200;
    double lambda_fraction = 0.1;
    int threads = 4;
    int repeats = 3;
    bool with_reference = false;
    std::uint64_t seed = 7;
    app.add_option("--p", p, "Variables (multiple of 4)")->capture_default_str();
    app.add_option("--n", n, "Observations")->capture_default_str();
    app.add_option("--lambda-fraction", lambda_fraction, "Penalty as a fraction of the empty-graph penalty")
        ->capture_default_str();
    app.add_option("--threads", threads, "Threads for the parallel kernel")->capture_default_str();
    app.add_option("--repeats", repeats, "Timing repeats (best is reported)")->capture_default_str();
    app.add_option("--seed", seed, "Seed")->capture_default_str();
    app.add_flag("--reference", with_reference, "Also time the serial reference solver (slow)");
    CLI11_PARSE(app, argc, argv);

    const auto edges = pdag::random_dag(p, 0.95, pdag::derive_seed(seed, 0, 0, 1));
    const auto truth = pdag::cholesky_from_dag(p, edges, pdag::derive_seed(seed, 0, 0, 2));
    const auto s = pdag::compute_covariance(pdag::sample_observations(truth, n, pdag::derive_seed(seed, 1, 0)));

    const std::size_t q = p / 4;
    const std::vector<std::pair<std::string, pdag::PartitionSpec>> setups{
        {"CCDr", {"CCDr", {p}, {}}},
        {"PDAG-2", {"PDAG-2", {q, p - q}, {}}},
        {"PDAG-3", {"PDAG-3", {q, q, p - 2 * q}, {}}},
        {"PDAG-4", {"PDAG-4", {q, q, q, p - 3 * q}, {}}},
    };

    std::printf("p=%zu n=%zu threads=%d\n", p, n, threads);
    std::printf("%-8s %10s %8s %12s %12s %12s\n", "setup", "lambda", "edges", "serial[s]", "parallel[s]",
                "reference[s]");
    for (const auto& [label, spec] : setups) {
        const pdag::Partition partition = spec.resolve(truth.topological_order);
        pdag::FitOptions options;
        const double hi = pdag::penalty_grid(s, partition, 2, options).front();
        options.lambda = hi * lambda_fraction;

        std::size_t edge_count = 0;
        options.thread_count = 1;
        const double serial = time_it([&] { edge_count = pdag::fit(s, partition, options).estimate.edge_count(); },
                                      repeats);
        options.thread_count = threads;
        const double parallel = time_it([&] { pdag::fit(s, partition, options); }, repeats);
        double reference = -1.0;
        if (with_reference) {
            options.thread_count = 1;
            reference = time_it([&] { pdag::reference::fit_serial(s, partition, options); }, 1);
        }
        std::printf("%-8s %10.4g %8zu %12.4f %12.4f %12.4f\n", label.c_str(), options.lambda, edge_count, serial,
                    parallel, reference);
    }
    return 0;
}
