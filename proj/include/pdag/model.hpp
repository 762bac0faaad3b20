#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace pdag {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed or non-finite input, dimension mismatches.
class InputError : public Error {
public:
    using Error::Error;
};

/// A value outside the domain of an update formula (non-positive variance or diagonal).
class DomainError : public Error {
public:
    using Error::Error;
};

/// Partition or variable-name validation failure. The message lists every offender.
class ValidationError : public Error {
public:
    using Error::Error;
};

class DegenerateDataError : public Error {
public:
    DegenerateDataError(std::size_t column, const std::string& what)
        : Error(what), column_(column) {}
    std::size_t column() const noexcept { return column_; }

private:
    std::size_t column_;
};

/// A CholeskyFactor invariant does not hold (structural zero, pair exclusivity, acyclicity).
class InvariantError : public Error {
public:
    using Error::Error;
};

/// Symmetric p x p matrix with strictly positive diagonal plus variable names.
class SampleCovariance {
public:
    /// Throws InputError when entries are non-square, non-finite or asymmetric beyond
    /// rounding, DegenerateDataError when a diagonal entry is not positive. The stored
    /// matrix is exactly symmetric. Empty `names` yields "V1".."Vp".
    explicit SampleCovariance(Matrix entries, std::vector<std::string> names = {});

    std::size_t size() const noexcept { return static_cast<std::size_t>(entries_.rows()); }
    const Matrix& matrix() const noexcept { return entries_; }
    double operator()(std::size_t i, std::size_t j) const {
        return entries_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
    const std::vector<std::string>& names() const noexcept { return names_; }

private:
    Matrix entries_;
    std::vector<std::string> names_;
};

std::vector<std::string> default_names(std::size_t p);

/// S = (1/n) X^t X on the (optionally column-centered) n x p data matrix.
SampleCovariance compute_covariance(const Matrix& data, bool center = true,
                                    std::vector<std::string> names = {});

/// Maps between user indices and block-contiguous (canonical) indices.
struct Relabeling {
    std::vector<std::size_t> to_canonical;  // to_canonical[original] = canonical
    std::vector<std::size_t> to_original;   // to_original[canonical] = original
};

/// Ordered disjoint cover of {0..p-1}. Block 0 is the most upstream; edges between
/// blocks may only point from an earlier block to a later one.
class Partition {
public:
    /// Throws ValidationError on empty blocks, overlaps, out-of-range or missing indices.
    Partition(std::vector<std::vector<std::size_t>> blocks, std::size_t p);

    static Partition single_block(std::size_t p);
    /// Singleton blocks following `ordering` (a permutation of 0..p-1).
    static Partition singletons(const std::vector<std::size_t>& ordering);
    static Partition natural_singletons(std::size_t p);

    std::size_t size() const noexcept { return p_; }
    std::size_t block_count() const noexcept { return blocks_.size(); }
    const std::vector<std::vector<std::size_t>>& blocks() const noexcept { return blocks_; }
    std::size_t block_of(std::size_t variable) const { return block_of_.at(variable); }
    const Relabeling& relabeling() const noexcept { return relabeling_; }
    /// Block boundaries m_0 = 0 < m_1 < ... < m_R = p in canonical indices.
    const std::vector<std::size_t>& boundaries() const noexcept { return boundaries_; }

    bool operator==(const Partition& other) const { return blocks_ == other.blocks_ && p_ == other.p_; }

private:
    std::vector<std::vector<std::size_t>> blocks_;
    std::size_t p_;
    std::vector<std::size_t> block_of_;
    std::vector<std::size_t> boundaries_;
    Relabeling relabeling_;
};

/// Checks named blocks against `names` and returns the canonical relabeling.
/// Within a block, variables keep the listed order.
Relabeling validate_partition(const std::vector<std::vector<std::string>>& blocks,
                              const std::vector<std::string>& names);

Partition partition_from_names(const std::vector<std::vector<std::string>>& blocks,
                               const std::vector<std::string>& names);

/// The estimand B with Omega = B^t B, stored in original variable order.
/// Off-diagonal B(i, j) != 0 means the directed edge j -> i (row = child, column = parent).
class CholeskyFactor {
public:
    /// Throws InvariantError unless diag > 0, entries above the block structure are zero,
    /// within-block pairs are exclusive, and the implied graph is acyclic.
    CholeskyFactor(Matrix values, Partition partition);

    std::size_t size() const noexcept { return static_cast<std::size_t>(values_.rows()); }
    const Matrix& values() const noexcept { return values_; }
    double operator()(std::size_t i, std::size_t j) const {
        return values_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
    const Partition& partition() const noexcept { return partition_; }
    std::size_t edge_count() const;

private:
    Matrix values_;
    Partition partition_;
};

struct FitOptions {
    double lambda = 0.0;
    double tol = 1e-4;
    int max_sweeps = 1000;
    int thread_count = 1;

    /// Throws InputError when lambda < 0, tol <= 0, max_sweeps < 1 or thread_count < 1.
    void validate() const;
};

/// trace(B^t B S) - sum_i log B_ii + lambda * sum_{i != j} |B_ij|, accumulated row by row.
/// Throws DomainError when a diagonal entry is not positive.
double objective(const Matrix& b, const SampleCovariance& s, double lambda);
double objective(const CholeskyFactor& b, const SampleCovariance& s, double lambda);

/// Contribution of each block row of `partition` to the objective; sums to objective().
std::vector<double> objective_by_block_rows(const Matrix& b, const SampleCovariance& s,
                                            const Partition& partition, double lambda);

}  // namespace pdag
