#pragma once

// Test-only oracles. Nothing here calls into the optimizer; they evaluate objectives,
// structure and reachability directly so they can check the implementation.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include <Eigen/Dense>

#include "pdag/model.hpp"

namespace oracle {

/// Minimum of f on `points` equally spaced points of [lo, hi]. Returns (argmin, min).
inline std::pair<double, double> grid_minimum(const std::function<double(double)>& f, double lo, double hi,
                                              std::size_t points) {
    double best_x = lo;
    double best = f(lo);
    const double step = (hi - lo) / static_cast<double>(points - 1);
    for (std::size_t k = 1; k < points; ++k) {
        const double x = lo + step * static_cast<double>(k);
        const double v = f(x);
        if (v < best) {
            best = v;
            best_x = x;
        }
    }
    return {best_x, best};
}

inline double diagonal_objective(double s, double c, double x) { return s * x * x + 2.0 * c * x - std::log(x); }

inline double offdiag_objective(double s, double c, double lambda, double b) {
    return s * b * b + 2.0 * c * b + lambda * std::abs(b);
}

/// Direct evaluation: trace(B^t B S) - sum log B_ii + lambda * sum_{i != j} |B_ij|.
inline double full_objective(const Eigen::MatrixXd& b, const Eigen::MatrixXd& s, double lambda) {
    double value = (b.transpose() * b * s).trace();
    for (Eigen::Index i = 0; i < b.rows(); ++i) {
        value -= std::log(b(i, i));
        for (Eigen::Index j = 0; j < b.cols(); ++j)
            if (i != j) value += lambda * std::abs(b(i, j));
    }
    return value;
}

/// Floyd-Warshall style closure: reach[u][v] iff a directed path u -> ... -> v exists
/// (length >= 1).
inline std::vector<std::vector<bool>> transitive_closure(std::size_t n,
                                                         const std::vector<std::pair<std::size_t, std::size_t>>& edges) {
    std::vector<std::vector<bool>> reach(n, std::vector<bool>(n, false));
    for (auto [u, v] : edges) reach[u][v] = true;
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t i = 0; i < n; ++i)
            if (reach[i][k])
                for (std::size_t j = 0; j < n; ++j)
                    if (reach[k][j]) reach[i][j] = true;
    return reach;
}

/// Empty string when B satisfies every CholeskyFactor invariant for `partition`, else the
/// first violation. Acyclicity is checked by repeatedly peeling off nodes without parents.
inline std::string structural_violation(const Eigen::MatrixXd& b, const pdag::Partition& partition) {
    const auto p = static_cast<std::size_t>(b.rows());
    auto at = [&](std::size_t i, std::size_t j) {
        return b(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    };
    for (std::size_t i = 0; i < p; ++i) {
        if (!(at(i, i) > 0.0)) return "non-positive diagonal at " + std::to_string(i);
        for (std::size_t j = 0; j < p; ++j) {
            if (i == j || at(i, j) == 0.0) continue;
            if (partition.block_of(i) < partition.block_of(j))
                return "structural zero violated at (" + std::to_string(i) + "," + std::to_string(j) + ")";
            if (partition.block_of(i) == partition.block_of(j) && at(j, i) != 0.0)
                return "pair exclusivity violated at (" + std::to_string(i) + "," + std::to_string(j) + ")";
        }
    }
    std::vector<bool> removed(p, false);
    std::size_t remaining = p;
    while (remaining > 0) {
        bool progressed = false;
        for (std::size_t v = 0; v < p; ++v) {
            if (removed[v]) continue;
            bool has_parent = false;
            for (std::size_t u = 0; u < p && !has_parent; ++u)
                has_parent = !removed[u] && u != v && at(v, u) != 0.0;
            if (!has_parent) {
                removed[v] = true;
                --remaining;
                progressed = true;
            }
        }
        if (!progressed) return "graph has a directed cycle";
    }
    return {};
}

/// Sample covariance of n standard-normal-times-mixing draws; positive definite for n > p.
inline pdag::SampleCovariance random_covariance(std::size_t p, std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    Eigen::MatrixXd mix(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p));
    for (Eigen::Index i = 0; i < mix.rows(); ++i)
        for (Eigen::Index j = 0; j < mix.cols(); ++j) mix(i, j) = (i == j ? 1.0 : 0.0) + 0.4 * normal(rng);
    Eigen::MatrixXd z(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
    for (Eigen::Index i = 0; i < z.rows(); ++i)
        for (Eigen::Index j = 0; j < z.cols(); ++j) z(i, j) = normal(rng);
    return pdag::compute_covariance(z * mix, true);
}

/// Scratch directory removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("pdag_test_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() { std::filesystem::remove_all(path_); }
    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
}

}  // namespace oracle
