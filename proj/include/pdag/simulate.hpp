#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "pdag/graph.hpp"
#include "pdag/model.hpp"
#include "pdag/optimizer.hpp"

namespace pdag {

/// Ground truth: unit diagonal, off-diagonal magnitudes in [0.3, 0.7] with random signs.
struct TrueModel {
    CholeskyFactor b_true;
    std::vector<Edge> edges;  // sorted by (parent, child), weight = B(child, parent)
    std::vector<std::size_t> topological_order;
    std::uint64_t seed = 0;
};

/// Throws InputError naming a witness cycle when `edges` is cyclic.
TrueModel cholesky_from_dag(std::size_t p, const std::vector<Edge>& edges, std::uint64_t seed);

/// Each of the p(p-1)/2 pairs that respect a random topological order receives an edge
/// with probability 1 - sparsity. Sorted by (parent, child).
std::vector<Edge> random_dag(std::size_t p, double sparsity, std::uint64_t seed);

/// n x p draws from N(0, (B^t B)^{-1}): z ~ N(0, I), then B x = z solved parents-first.
Matrix sample_observations(const TrueModel& model, std::size_t n, std::uint64_t seed);

/// Seed for the stream identified by (master, replication, n_index, stream), mixed through
/// std::seed_seq. Replications and sample sizes get independent generators.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t replication, std::uint64_t n_index,
                          std::uint64_t stream = 0);

/// Blocks described along the true topological order.
struct PartitionSpec {
    std::string label;
    /// Consecutive block sizes along the topological order; must sum to p.
    std::vector<std::size_t> sizes;
    /// Explicit blocks of variable indices; used instead of `sizes` when non-empty.
    std::vector<std::vector<std::size_t>> blocks;

    Partition resolve(const std::vector<std::size_t>& topological_order) const;
};

struct ExperimentConfig {
    std::size_t replications = 20;
    std::vector<std::size_t> n_list{40, 50, 100, 200};
    /// Either a network (p + edges) or a random DAG (random_p, sparsity).
    std::optional<std::vector<Edge>> network;
    std::size_t p = 0;
    double sparsity = 0.95;
    std::vector<std::string> names;
    std::vector<PartitionSpec> partitions;
    std::size_t grid_size = 30;
    std::uint64_t seed = 1;
    int threads = 1;
    double tol = 1e-4;
    int max_sweeps = 1000;
    bool center = true;
};

struct ExperimentCell {
    std::string partition;
    std::size_t n = 0;
    std::vector<double> auc;         // per replication, NaN when undefined
    double mean_auc = 0.0;           // over defined replications
    double sd_auc = 0.0;
    std::vector<double> seconds;     // wall clock per replication (path fits only)
    double mean_seconds = 0.0;
};

struct ExperimentReport {
    std::size_t p = 0;
    std::size_t true_edges = 0;
    std::uint64_t seed = 0;
    std::size_t replications = 0;
    std::size_t grid_size = 0;
    std::vector<ExperimentCell> cells;  // partition-major, then n in n_list order

    const ExperimentCell& cell(const std::string& partition, std::size_t n) const;
};

/// Draws the true model once from the master seed, then for every (replication, n):
/// samples data, fits a penalty path for each partition and scores it by AUC-MA.
ExperimentReport experiment(const ExperimentConfig& config);

}  // namespace pdag
