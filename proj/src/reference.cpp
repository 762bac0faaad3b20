#include "pdag/reference.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace pdag::reference {

namespace {

using Index = Eigen::Index;

double row_value(const Matrix& b, const Matrix& s, Index i, double lambda) {
    const double quad = b.row(i) * s * b.row(i).transpose();
    double l1 = 0.0;
    for (Index j = 0; j < b.cols(); ++j)
        if (j != i) l1 += std::abs(b(i, j));
    return quad - std::log(b(i, i)) + lambda * l1;
}

// sum_{k != j} S_jk B_ik
double inner(const Matrix& b, const Matrix& s, Index i, Index j) {
    double c = 0.0;
    for (Index k = 0; k < b.cols(); ++k)
        if (k != j) c += s(j, k) * b(i, k);
    return c;
}

// Does `from` reach `to` in the graph with edges k -> i for every B_ik != 0, i != k?
bool reaches(const Matrix& b, Index from, Index to) {
    const Index p = b.rows();
    std::vector<char> seen(static_cast<std::size_t>(p), 0);
    std::vector<Index> stack{from};
    seen[static_cast<std::size_t>(from)] = 1;
    while (!stack.empty()) {
        const Index u = stack.back();
        stack.pop_back();
        if (u == to) return true;
        for (Index child = 0; child < p; ++child) {
            if (child == u || b(child, u) == 0.0 || seen[static_cast<std::size_t>(child)]) continue;
            seen[static_cast<std::size_t>(child)] = 1;
            stack.push_back(child);
        }
    }
    return false;
}

}  // namespace

FitResult fit_serial(const SampleCovariance& s, const Partition& partition,
                     const FitOptions& options) {
    options.validate();
    if (partition.size() != s.size()) throw InputError("partition and covariance dimensions differ");
    const Matrix& sm = s.matrix();
    const double lambda = options.lambda;
    const Index p = static_cast<Index>(s.size());
    const auto& order = partition.relabeling().to_original;
    const auto& bounds = partition.boundaries();
    auto at = [&](std::size_t canonical) { return static_cast<Index>(order[canonical]); };

    Matrix b = Matrix::Identity(p, p);
    std::vector<std::vector<double>> traces;
    std::vector<BlockSummary> summaries;
    bool converged = true;
    double final_change = 0.0;
    int sweeps_used = 0;

    for (std::size_t r = 0; r < partition.block_count(); ++r) {
        const std::size_t first = bounds[r];
        const std::size_t end = bounds[r + 1];
        auto block_value = [&] {
            double q = 0.0;
            for (std::size_t i = first; i < end; ++i) q += row_value(b, sm, at(i), lambda);
            return q;
        };
        std::vector<double> trace{block_value()};
        BlockSummary summary{r, 0, false, 0.0};
        double change = 0.0;
        for (int sweep = 1; sweep <= options.max_sweeps; ++sweep) {
            const Matrix before = b;
            for (std::size_t i = first; i < end; ++i)
                b(at(i), at(i)) = update_diagonal(sm(at(i), at(i)), inner(b, sm, at(i), at(i)));

            for (std::size_t ci = first; ci < end; ++ci) {
                for (std::size_t cj = ci + 1; cj < end; ++cj) {
                    const Index i = at(ci);
                    const Index j = at(cj);
                    b(i, j) = 0.0;
                    b(j, i) = 0.0;
                    const double cand_ij = update_free_offdiagonal(sm(j, j), inner(b, sm, i, j), lambda);
                    const double cand_ji = update_free_offdiagonal(sm(i, i), inner(b, sm, j, i), lambda);
                    const bool ij_free = !reaches(b, i, j);  // edge j -> i closes a cycle iff i reaches j
                    const bool ji_free = !reaches(b, j, i);
                    if (ij_free && ji_free) {
                        Matrix option_ij = b;
                        option_ij(i, j) = cand_ij;
                        Matrix option_ji = b;
                        option_ji(j, i) = cand_ji;
                        const double q1 = row_value(option_ij, sm, i, lambda) + row_value(option_ij, sm, j, lambda);
                        const double q2 = row_value(option_ji, sm, i, lambda) + row_value(option_ji, sm, j, lambda);
                        if (q1 > q2)
                            b(j, i) = cand_ji;
                        else
                            b(i, j) = cand_ij;
                    } else if (ij_free) {
                        b(i, j) = cand_ij;
                    } else if (ji_free) {
                        b(j, i) = cand_ji;
                    }
                }
            }

            for (std::size_t ci = first; ci < end; ++ci)
                for (std::size_t cj = 0; cj < first; ++cj)
                    b(at(ci), at(cj)) =
                        update_free_offdiagonal(sm(at(cj), at(cj)), inner(b, sm, at(ci), at(cj)), lambda);

            change = (b - before).cwiseAbs().maxCoeff();
            trace.push_back(block_value());
            summary.sweeps = sweep;
            if (change < options.tol) {
                summary.converged = true;
                break;
            }
        }
        converged = converged && summary.converged;
        final_change = std::max(final_change, change);
        sweeps_used = std::max(sweeps_used, summary.sweeps);
        summaries.push_back(summary);
        traces.push_back(std::move(trace));
    }

    std::size_t longest = 0;
    for (const auto& t : traces) longest = std::max(longest, t.size());
    std::vector<double> trace(longest, 0.0);
    for (const auto& t : traces)
        for (std::size_t k = 0; k < longest; ++k) trace[k] += t[std::min(k, t.size() - 1)];

    FitResult result{CholeskyFactor(std::move(b), partition), lambda, std::move(trace), sweeps_used,
                     converged, final_change, 0.0, std::move(summaries)};
    result.max_kkt_residual = kkt_residual(result.estimate, s, lambda);
    return result;
}

}  // namespace pdag::reference
