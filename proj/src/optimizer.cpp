#include "pdag/optimizer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <optional>

#include <omp.h>

namespace pdag {

double soft_threshold(double x, double t) {
    const double shrunk = std::abs(x) - t;
    if (shrunk <= 0.0) return 0.0;
    return x > 0.0 ? shrunk : -shrunk;
}

double update_diagonal(double s_ii, double c) {
    if (!(s_ii > 0.0)) throw DomainError("diagonal update needs S_ii > 0");
    // Rationalized form of (-c + sqrt(c^2 + 2 s)) / (2 s); avoids cancellation for c >> 0.
    const double root = std::sqrt(c * c + 2.0 * s_ii);
    if (c <= 0.0) return (root - c) / (2.0 * s_ii);
    return 1.0 / (c + root);
}

double update_free_offdiagonal(double s_jj, double c, double lambda) {
    if (!(s_jj > 0.0)) throw DomainError("off-diagonal update needs S_jj > 0");
    return soft_threshold(-c / s_jj, lambda / (2.0 * s_jj));
}

CanonicalCovariance::CanonicalCovariance(const SampleCovariance& s, const Partition& partition)
    : p_(s.size()), data_(s.size() * s.size()) {
    if (partition.size() != p_) throw InputError("partition and covariance dimensions differ");
    const auto& order = partition.relabeling().to_original;
    for (std::size_t i = 0; i < p_; ++i)
        for (std::size_t j = 0; j < p_; ++j) data_[i * p_ + j] = s(order[i], order[j]);
}

BlockRowState::BlockRowState(const CanonicalCovariance& s, std::size_t first_row,
                             std::size_t end_row)
    : s_(&s),
      first_(first_row),
      end_(end_row),
      values_((end_row - first_row) * end_row, 0.0),
      cache_((end_row - first_row) * end_row, 0.0),
      graph_(end_row - first_row) {
    if (first_row >= end_row || end_row > s.size()) throw InputError("invalid block row range");
    for (std::size_t i = first_; i < end_; ++i) values_[offset(i) + i] = 1.0;
    refresh();
}

void BlockRowState::set_value(std::size_t i, std::size_t j, double v) {
    double& slot = values_[offset(i) + j];
    const double delta = v - slot;
    if (delta == 0.0) return;
    slot = v;
    double* cache = cache_.data() + offset(i);
    const double* s_row = s_->row(j);
    for (std::size_t k = 0; k < end_; ++k) cache[k] += delta * s_row[k];
}

void BlockRowState::refresh() {
    for (std::size_t i = first_; i < end_; ++i) {
        double* cache = cache_.data() + offset(i);
        const double* row = values_.data() + offset(i);
        std::fill(cache, cache + end_, 0.0);
        for (std::size_t k = 0; k < end_; ++k) {
            if (row[k] == 0.0) continue;
            const double* s_row = s_->row(k);
            for (std::size_t h = 0; h < end_; ++h) cache[h] += row[k] * s_row[h];
        }
    }
}

double BlockRowState::objective(double lambda) const {
    double total = 0.0;
    for (std::size_t i = first_; i < end_; ++i) {
        const double* row = values_.data() + offset(i);
        const double* cache = cache_.data() + offset(i);
        double quad = 0.0;
        double l1 = 0.0;
        for (std::size_t j = 0; j < end_; ++j) {
            quad += row[j] * cache[j];
            if (j != i) l1 += std::abs(row[j]);
        }
        total += quad - std::log(row[i]) + lambda * l1;
    }
    return total;
}

PairUpdate update_constrained_pair(BlockRowState& state, std::size_t i, std::size_t j,
                                   double lambda) {
    const std::size_t first = state.first_row();
    if (i == j || i < first || j < first || i >= state.end_row() || j >= state.end_row())
        throw InputError("constrained pair must be two distinct rows of the block");
    const std::size_t li = i - first;
    const std::size_t lj = j - first;
    const auto& s = state.covariance();

    // B_ij lives in row i (edge j -> i), B_ji in row j (edge i -> j).
    const double c_ij = state.inner(i, j);
    const double c_ji = state.inner(j, i);
    const double cand_ij = update_free_offdiagonal(s(j, j), c_ij, lambda);
    const double cand_ji = update_free_offdiagonal(s(i, i), c_ji, lambda);

    DirectedGraph& g = state.graph();
    g.remove_edge(lj, li);
    g.remove_edge(li, lj);
    bool keep_ij = cand_ij != 0.0 && !g.creates_cycle(lj, li);
    bool keep_ji = cand_ji != 0.0 && !g.creates_cycle(li, lj);

    if (keep_ij && keep_ji) {
        const double q_ij = s(j, j) * cand_ij * cand_ij + 2.0 * c_ij * cand_ij + lambda * std::abs(cand_ij);
        const double q_ji = s(i, i) * cand_ji * cand_ji + 2.0 * c_ji * cand_ji + lambda * std::abs(cand_ji);
        if (q_ij < q_ji || (q_ij == q_ji && i < j))
            keep_ji = false;
        else
            keep_ij = false;
    }

    PairUpdate out{keep_ij ? cand_ij : 0.0, keep_ji ? cand_ji : 0.0};
    state.set_value(i, j, out.b_ij);
    state.set_value(j, i, out.b_ji);
    if (keep_ij) g.add_edge(lj, li);
    if (keep_ji) g.add_edge(li, lj);
    return out;
}

BlockRowFit fit_block_row(std::size_t r, const CanonicalCovariance& s, const Partition& partition,
                          const FitOptions& options) {
    if (r >= partition.block_count()) throw InputError("block row index out of range");
    const auto start = std::chrono::steady_clock::now();
    const std::size_t first = partition.boundaries()[r];
    const std::size_t end = partition.boundaries()[r + 1];
    const double lambda = options.lambda;

    BlockRowFit out{BlockRowState(s, first, end), {}, 0, false, 0.0, 0.0};
    BlockRowState& state = out.state;
    out.objective_trace.push_back(state.objective(lambda));

    for (int sweep = 1; sweep <= options.max_sweeps; ++sweep) {
        double change = 0.0;
        auto assign = [&](std::size_t i, std::size_t j, double v) {
            change = std::max(change, std::abs(v - state.value(i, j)));
            state.set_value(i, j, v);
        };

        for (std::size_t i = first; i < end; ++i)
            assign(i, i, update_diagonal(s(i, i), state.inner(i, i)));

        for (std::size_t i = first; i < end; ++i) {
            for (std::size_t j = i + 1; j < end; ++j) {
                const double old_ij = state.value(i, j);
                const double old_ji = state.value(j, i);
                const PairUpdate upd = update_constrained_pair(state, i, j, lambda);
                change = std::max({change, std::abs(upd.b_ij - old_ij), std::abs(upd.b_ji - old_ji)});
            }
        }

        for (std::size_t i = first; i < end; ++i)
            for (std::size_t j = 0; j < first; ++j)
                assign(i, j, update_free_offdiagonal(s(j, j), state.inner(i, j), lambda));

        state.refresh();
        out.objective_trace.push_back(state.objective(lambda));
        out.sweeps = sweep;
        out.final_change = change;
        if (change < options.tol) {
            out.converged = true;
            break;
        }
    }
    out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return out;
}

double kkt_residual(const CholeskyFactor& b, const SampleCovariance& s, double lambda) {
    const std::size_t p = b.size();
    if (s.size() != p) throw InputError("factor and covariance dimensions differ");
    const Matrix& bv = b.values();
    const Matrix& sm = s.matrix();
    const auto& partition = b.partition();

    DirectedGraph graph(p);
    for (const auto& e : edges_of(b)) graph.add_edge(e.parent, e.child);

    double worst = 0.0;
    for (std::size_t i = 0; i < p; ++i) {
        const auto ii = static_cast<Eigen::Index>(i);
        const Vector prod = sm * bv.row(ii).transpose();
        for (std::size_t j = 0; j < p; ++j) {
            const auto jj = static_cast<Eigen::Index>(j);
            const double value = bv(ii, jj);
            const double c = prod(jj) - sm(jj, jj) * value;
            double residual = 0.0;
            if (i == j) {
                residual = std::abs(2.0 * sm(ii, ii) * value + 2.0 * c - 1.0 / value);
            } else if (value != 0.0) {
                const double sign = value > 0.0 ? 1.0 : -1.0;
                residual = std::abs(2.0 * sm(jj, jj) * value + 2.0 * c + lambda * sign);
            } else {
                const std::size_t bi = partition.block_of(i);
                const std::size_t bj = partition.block_of(j);
                if (bj > bi) continue;  // structural zero
                if (bj == bi && (bv(jj, ii) != 0.0 || graph.reaches(i, j))) continue;
                residual = std::max(0.0, std::abs(2.0 * c) - lambda);
            }
            worst = std::max(worst, residual);
        }
    }
    return worst;
}

namespace {

std::size_t resolve_threads(int requested) {
    return static_cast<std::size_t>(std::max(1, requested));
}

}  // namespace

FitResult fit(const SampleCovariance& s, const Partition& partition, const FitOptions& options) {
    options.validate();
    if (partition.size() != s.size()) throw InputError("partition and covariance dimensions differ");

    const CanonicalCovariance cs(s, partition);
    const std::size_t blocks = partition.block_count();
    std::vector<std::optional<BlockRowFit>> rows(blocks);
    std::vector<std::exception_ptr> errors(blocks);

    const int threads = static_cast<int>(std::min(resolve_threads(options.thread_count), blocks));
    const auto block_count = static_cast<long>(blocks);
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
    for (long r = 0; r < block_count; ++r) {
        try {
            rows[static_cast<std::size_t>(r)].emplace(
                fit_block_row(static_cast<std::size_t>(r), cs, partition, options));
        } catch (...) {
            errors[static_cast<std::size_t>(r)] = std::current_exception();
        }
    }
    for (const auto& err : errors)
        if (err) std::rethrow_exception(err);

    const std::size_t p = s.size();
    const auto& to_original = partition.relabeling().to_original;
    Matrix b = Matrix::Zero(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p));
    std::size_t longest = 0;
    for (const auto& row : rows) longest = std::max(longest, row->objective_trace.size());

    std::vector<double> trace(longest, 0.0);
    std::vector<BlockSummary> summaries;
    bool converged = true;
    double final_change = 0.0;
    int sweeps = 0;
    for (std::size_t r = 0; r < blocks; ++r) {
        const BlockRowFit& row = *rows[r];
        const BlockRowState& st = row.state;
        for (std::size_t i = st.first_row(); i < st.end_row(); ++i)
            for (std::size_t j = 0; j < st.end_row(); ++j)
                b(static_cast<Eigen::Index>(to_original[i]), static_cast<Eigen::Index>(to_original[j])) =
                    st.value(i, j);
        for (std::size_t k = 0; k < longest; ++k)
            trace[k] += row.objective_trace[std::min(k, row.objective_trace.size() - 1)];
        converged = converged && row.converged;
        final_change = std::max(final_change, row.final_change);
        sweeps = std::max(sweeps, row.sweeps);
        summaries.push_back({r, row.sweeps, row.converged, row.seconds});
    }

    FitResult result{CholeskyFactor(std::move(b), partition),
                     options.lambda,
                     std::move(trace),
                     sweeps,
                     converged,
                     final_change,
                     0.0,
                     std::move(summaries)};
    result.max_kkt_residual = kkt_residual(result.estimate, s, options.lambda);
    return result;
}

FitResult fit_cscs(const SampleCovariance& s, const std::vector<std::size_t>& ordering,
                   const FitOptions& options) {
    return fit(s, Partition::singletons(ordering), options);
}

FitResult fit_ccdr(const SampleCovariance& s, const FitOptions& options) {
    return fit(s, Partition::single_block(s.size()), options);
}

std::vector<double> penalty_grid(const SampleCovariance& s, const Partition& partition,
                                 std::size_t count, const FitOptions& options) {
    if (count < 2) throw InputError("penalty grid needs at least 2 values");
    constexpr int max_steps = 60;
    FitOptions probe = options;
    auto is_empty = [&](double lambda) {
        probe.lambda = lambda;
        return fit(s, partition, probe).estimate.edge_count() == 0;
    };

    double hi = 1.0;
    if (is_empty(hi)) {
        for (int step = 0; step < max_steps && is_empty(hi / 2.0); ++step) hi /= 2.0;
    } else {
        int step = 0;
        do {
            if (++step > max_steps)
                throw Error("penalty doubling did not produce an empty graph after 60 steps");
            hi *= 2.0;
        } while (!is_empty(hi));
    }

    std::vector<double> grid(count);
    const double ratio = 1e-4;
    for (std::size_t k = 0; k < count; ++k)
        grid[k] = hi * std::pow(ratio, static_cast<double>(k) / static_cast<double>(count - 1));
    grid.back() = hi * ratio;
    return grid;
}

FitPath fit_path(const SampleCovariance& s, const Partition& partition,
                 const std::vector<double>& grid, const FitOptions& options) {
    options.validate();
    std::vector<std::optional<FitResult>> fits(grid.size());
    std::vector<std::exception_ptr> errors(grid.size());
    FitOptions inner = options;
    inner.thread_count = 1;

    const auto points = static_cast<long>(grid.size());
    const int threads = std::max(1, std::min(options.thread_count, static_cast<int>(grid.size())));
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
    for (long k = 0; k < points; ++k) {
        const auto at = static_cast<std::size_t>(k);
        try {
            FitOptions point = inner;
            point.lambda = grid[at];
            fits[at].emplace(fit(s, partition, point));
        } catch (...) {
            errors[at] = std::current_exception();
        }
    }
    for (const auto& err : errors)
        if (err) std::rethrow_exception(err);

    FitPath path{grid, {}};
    path.fits.reserve(grid.size());
    for (auto& f : fits) path.fits.push_back(std::move(*f));
    return path;
}

namespace {

double density_of(const FitResult& f) {
    const double p = static_cast<double>(f.estimate.size());
    if (p < 2) return 0.0;
    return static_cast<double>(f.estimate.edge_count()) / (p * (p - 1.0) / 2.0);
}

}  // namespace

DensitySelection select_lambda_for_density(const SampleCovariance& s, const Partition& partition,
                                           double target_density, double tolerance,
                                           const FitOptions& options) {
    if (!(target_density < 1.0) || target_density < 0.0)
        throw InputError("target density must lie in [0, 1)");
    if (!(tolerance > 0.0)) throw InputError("density tolerance must be > 0");
    const auto ends = penalty_grid(s, partition, 2, options);

    FitOptions opts = options;
    auto run = [&](double lambda) {
        opts.lambda = lambda;
        return fit(s, partition, opts);
    };

    FitResult at_hi = run(ends.front());
    DensitySelection best{ends.front(), density_of(at_hi), false, 0, std::move(at_hi)};
    auto consider = [&](double lambda, FitResult&& f, int iteration) {
        const double d = density_of(f);
        if (std::abs(d - target_density) < std::abs(best.density - target_density)) {
            best.lambda = lambda;
            best.density = d;
            best.fit = std::move(f);
            best.iterations = iteration;
        }
        return d;
    };
    if (std::abs(best.density - target_density) <= tolerance) {
        best.within_tolerance = true;
        return best;
    }
    consider(ends.back(), run(ends.back()), 0);
    if (std::abs(best.density - target_density) <= tolerance) {
        best.within_tolerance = true;
        return best;
    }

    double log_lo = std::log(ends.back());
    double log_hi = std::log(ends.front());
    for (int it = 1; it <= 40; ++it) {
        const double mid = 0.5 * (log_lo + log_hi);
        const double lambda = std::exp(mid);
        const double d = consider(lambda, run(lambda), it);
        if (std::abs(d - target_density) <= tolerance) break;
        if (d > target_density)
            log_lo = mid;
        else
            log_hi = mid;
    }
    best.within_tolerance = std::abs(best.density - target_density) <= tolerance;
    return best;
}

}  // namespace pdag
