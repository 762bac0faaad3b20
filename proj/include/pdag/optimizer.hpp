#pragma once

#include <cstddef>
#include <vector>

#include "pdag/graph.hpp"
#include "pdag/model.hpp"

namespace pdag {

/// sign(x) * max(|x| - t, 0)
double soft_threshold(double x, double t);

/// Minimizer of s_ii * x^2 + 2 c x - log x over x > 0:
/// (-c + sqrt(c^2 + 2 s_ii)) / (2 s_ii). Throws DomainError when s_ii <= 0.
double update_diagonal(double s_ii, double c);

/// Minimizer of s_jj * b^2 + 2 c b + lambda |b|: soft_threshold(-c / s_jj, lambda / (2 s_jj)).
/// Throws DomainError when s_jj <= 0.
double update_free_offdiagonal(double s_jj, double c, double lambda);

/// Sample covariance permuted into the canonical (block-contiguous) order, row-major.
class CanonicalCovariance {
public:
    CanonicalCovariance(const SampleCovariance& s, const Partition& partition);

    std::size_t size() const noexcept { return p_; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * p_ + j]; }
    const double* row(std::size_t i) const { return data_.data() + i * p_; }

private:
    std::size_t p_;
    std::vector<double> data_;
};

/// Rows [first_row, end_row) of B in canonical indices together with the cached inner
/// products c_ij = sum_{k != j} S_jk B_ik over the block-row-local columns 0..end_row-1,
/// and the directed graph of the diagonal block (local node ids first_row..end_row-1
/// shifted to 0..m-1).
class BlockRowState {
public:
    /// Starts from the identity rows.
    BlockRowState(const CanonicalCovariance& s, std::size_t first_row, std::size_t end_row);

    std::size_t first_row() const noexcept { return first_; }
    std::size_t end_row() const noexcept { return end_; }
    std::size_t row_count() const noexcept { return end_ - first_; }

    double value(std::size_t i, std::size_t j) const { return values_[offset(i) + j]; }
    /// Writes B_ij and updates the inner-product cache of row i. Does not touch the graph.
    void set_value(std::size_t i, std::size_t j, double v);
    /// c_ij = sum_{k != j} S_jk B_ik.
    double inner(std::size_t i, std::size_t j) const {
        return cache_[offset(i) + j] - (*s_)(j, j) * values_[offset(i) + j];
    }
    /// Recomputes every cached S B_i^t from scratch.
    void refresh();
    /// Block-row objective Q_r. Uses the cache; call refresh() first for a drift-free value.
    double objective(double lambda) const;

    const CanonicalCovariance& covariance() const noexcept { return *s_; }
    DirectedGraph& graph() noexcept { return graph_; }
    const DirectedGraph& graph() const noexcept { return graph_; }

private:
    std::size_t offset(std::size_t i) const { return (i - first_) * end_; }

    const CanonicalCovariance* s_;
    std::size_t first_;
    std::size_t end_;
    std::vector<double> values_;
    std::vector<double> cache_;
    DirectedGraph graph_;
};

struct PairUpdate {
    double b_ij = 0.0;
    double b_ji = 0.0;
};

/// Joint update of the within-block pair (B_ij, B_ji), i != j both in the state's block:
/// a direction whose activation closes a cycle is pinned at zero; if both directions are
/// free, the one with the smaller objective wins (ties keep the lower canonical row).
/// Applies the result to `state` (values and graph) and returns it.
PairUpdate update_constrained_pair(BlockRowState& state, std::size_t i, std::size_t j,
                                   double lambda);

struct BlockRowFit {
    BlockRowState state;
    /// Q_r at the start point, then after every sweep.
    std::vector<double> objective_trace;
    int sweeps = 0;
    bool converged = false;
    double final_change = 0.0;
    double seconds = 0.0;
};

/// Coordinate descent on block row r (0-based) until the sup-norm change of a sweep
/// drops below options.tol or options.max_sweeps is reached.
BlockRowFit fit_block_row(std::size_t r, const CanonicalCovariance& s,
                          const Partition& partition, const FitOptions& options);

struct BlockSummary {
    std::size_t block = 0;
    int sweeps = 0;
    bool converged = false;
    double seconds = 0.0;
};

struct FitResult {
    CholeskyFactor estimate;
    double lambda = 0.0;
    /// Sum over block rows of Q_r after s sweeps (rows that stopped early hold their
    /// final value); entry 0 is the objective at B = I.
    std::vector<double> objective_trace;
    int sweeps_used = 0;
    bool converged = false;
    double final_change = 0.0;
    double max_kkt_residual = 0.0;
    std::vector<BlockSummary> blocks;

    double objective() const { return objective_trace.back(); }
};

/// Largest violation of the coordinate-wise optimality conditions at `b`: diagonal
/// stationarity, soft-threshold stationarity for nonzero off-diagonals, and
/// |2c| <= lambda for zero off-diagonals that could be activated without a cycle or a
/// pair conflict.
double kkt_residual(const CholeskyFactor& b, const SampleCovariance& s, double lambda);

/// Partition-DAG estimate starting from B = I. Block rows run concurrently on up to
/// options.thread_count threads; the result does not depend on the thread count.
FitResult fit(const SampleCovariance& s, const Partition& partition, const FitOptions& options);

/// Fully known ordering (singleton blocks in `ordering`).
FitResult fit_cscs(const SampleCovariance& s, const std::vector<std::size_t>& ordering,
                   const FitOptions& options);

/// No ordering information (one block).
FitResult fit_ccdr(const SampleCovariance& s, const FitOptions& options);

/// `count` penalties descending geometrically from the smallest power-of-two penalty
/// giving an empty graph down to that value / 1e4. Throws Error when 60 doublings do
/// not empty the graph. options.lambda is ignored.
std::vector<double> penalty_grid(const SampleCovariance& s, const Partition& partition,
                                 std::size_t count, const FitOptions& options);

struct FitPath {
    std::vector<double> lambdas;
    std::vector<FitResult> fits;
};

/// One independent fit per penalty (no warm starts), in grid order. Points run
/// concurrently on up to options.thread_count threads.
FitPath fit_path(const SampleCovariance& s, const Partition& partition,
                 const std::vector<double>& grid, const FitOptions& options);

struct DensitySelection {
    double lambda = 0.0;
    double density = 0.0;
    bool within_tolerance = false;
    int iterations = 0;
    FitResult fit;
};

/// Bisection on log(lambda) between the penalty_grid endpoints for an estimate whose
/// edge density is within `tolerance` of `target_density`. Returns the closest fit seen;
/// within_tolerance is false when the density jumps over the target.
DensitySelection select_lambda_for_density(const SampleCovariance& s, const Partition& partition,
                                           double target_density, double tolerance,
                                           const FitOptions& options);

}  // namespace pdag
