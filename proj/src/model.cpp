#include "pdag/model.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <unordered_map>

#include "pdag/graph.hpp"

namespace pdag {

namespace {

Eigen::Index idx(std::size_t i) { return static_cast<Eigen::Index>(i); }

std::string join(const std::vector<std::string>& items) {
    std::ostringstream out;
    for (std::size_t k = 0; k < items.size(); ++k) {
        if (k) out << ", ";
        out << items[k];
    }
    return out.str();
}

}  // namespace

std::vector<std::string> default_names(std::size_t p) {
    std::vector<std::string> names(p);
    for (std::size_t i = 0; i < p; ++i) names[i] = "V" + std::to_string(i + 1);
    return names;
}

SampleCovariance::SampleCovariance(Matrix entries, std::vector<std::string> names)
    : entries_(std::move(entries)), names_(std::move(names)) {
    if (entries_.rows() != entries_.cols() || entries_.rows() == 0)
        throw InputError("covariance must be a non-empty square matrix");
    const auto p = static_cast<std::size_t>(entries_.rows());
    if (names_.empty()) names_ = default_names(p);
    if (names_.size() != p) throw InputError("covariance has " + std::to_string(p) +
                                             " rows but " + std::to_string(names_.size()) +
                                             " names");
    if (!entries_.allFinite()) throw InputError("covariance has non-finite entries");
    for (Eigen::Index i = 0; i < entries_.rows(); ++i) {
        for (Eigen::Index j = i + 1; j < entries_.cols(); ++j) {
            const double a = entries_(i, j);
            const double b = entries_(j, i);
            const double scale = std::max({1.0, std::abs(a), std::abs(b)});
            if (std::abs(a - b) > 1e-10 * scale)
                throw InputError("covariance is not symmetric at (" + std::to_string(i + 1) +
                                 ", " + std::to_string(j + 1) + ")");
            const double mid = 0.5 * (a + b);
            entries_(i, j) = mid;
            entries_(j, i) = mid;
        }
    }
    for (std::size_t i = 0; i < p; ++i) {
        if (!(entries_(idx(i), idx(i)) > 0.0))
            throw DegenerateDataError(i, "variable '" + names_[i] + "' (column " +
                                             std::to_string(i + 1) + ") has zero variance");
    }
}

SampleCovariance compute_covariance(const Matrix& data, bool center,
                                    std::vector<std::string> names) {
    if (data.rows() < 2) throw InputError("need at least 2 observations");
    if (data.cols() < 1) throw InputError("need at least 1 variable");
    if (!data.allFinite()) throw InputError("data contains non-finite values");
    const auto n = static_cast<double>(data.rows());
    Matrix x = data;
    if (center) x.rowwise() -= x.colwise().mean();
    Matrix s(x.cols(), x.cols());
    for (Eigen::Index i = 0; i < x.cols(); ++i) {
        for (Eigen::Index j = i; j < x.cols(); ++j) {
            const double v = x.col(i).dot(x.col(j)) / n;
            s(i, j) = v;
            s(j, i) = v;
        }
    }
    return SampleCovariance(std::move(s), std::move(names));
}

Partition::Partition(std::vector<std::vector<std::size_t>> blocks, std::size_t p)
    : blocks_(std::move(blocks)), p_(p), block_of_(p, p) {
    std::vector<std::string> problems;
    if (blocks_.empty()) problems.push_back("partition has no blocks");
    for (std::size_t r = 0; r < blocks_.size(); ++r) {
        if (blocks_[r].empty()) problems.push_back("block " + std::to_string(r + 1) + " is empty");
        for (std::size_t v : blocks_[r]) {
            if (v >= p) {
                problems.push_back("variable " + std::to_string(v + 1) + " out of range");
            } else if (block_of_[v] != p) {
                problems.push_back("variable " + std::to_string(v + 1) + " in two blocks");
            } else {
                block_of_[v] = r;
            }
        }
    }
    std::vector<std::string> missing;
    for (std::size_t v = 0; v < p; ++v)
        if (block_of_[v] == p) missing.push_back(std::to_string(v + 1));
    if (!missing.empty()) problems.push_back("missing variables: " + join(missing));
    if (!problems.empty()) throw ValidationError("invalid partition: " + join(problems));

    relabeling_.to_canonical.assign(p, 0);
    relabeling_.to_original.reserve(p);
    boundaries_.push_back(0);
    for (const auto& block : blocks_) {
        for (std::size_t v : block) {
            relabeling_.to_canonical[v] = relabeling_.to_original.size();
            relabeling_.to_original.push_back(v);
        }
        boundaries_.push_back(relabeling_.to_original.size());
    }
}

Partition Partition::single_block(std::size_t p) {
    std::vector<std::size_t> all(p);
    for (std::size_t i = 0; i < p; ++i) all[i] = i;
    return Partition({all}, p);
}

Partition Partition::singletons(const std::vector<std::size_t>& ordering) {
    std::vector<std::vector<std::size_t>> blocks;
    blocks.reserve(ordering.size());
    for (std::size_t v : ordering) blocks.push_back({v});
    return Partition(std::move(blocks), ordering.size());
}

Partition Partition::natural_singletons(std::size_t p) {
    std::vector<std::size_t> order(p);
    for (std::size_t i = 0; i < p; ++i) order[i] = i;
    return singletons(order);
}

namespace {

std::vector<std::vector<std::size_t>> resolve_names(
    const std::vector<std::vector<std::string>>& blocks, const std::vector<std::string>& names) {
    std::unordered_map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < names.size(); ++i) index.emplace(names[i], i);

    std::vector<std::string> problems;
    std::map<std::size_t, std::size_t> seen;  // variable -> block
    std::vector<std::vector<std::size_t>> resolved(blocks.size());
    for (std::size_t r = 0; r < blocks.size(); ++r) {
        if (blocks[r].empty()) problems.push_back("block " + std::to_string(r + 1) + " is empty");
        for (const auto& name : blocks[r]) {
            auto it = index.find(name);
            if (it == index.end()) {
                problems.push_back("unknown variable '" + name + "'");
                continue;
            }
            auto [pos, fresh] = seen.emplace(it->second, r);
            if (!fresh) {
                problems.push_back("variable '" + name + "' in two blocks");
                continue;
            }
            resolved[r].push_back(it->second);
        }
    }
    std::vector<std::string> missing;
    for (std::size_t i = 0; i < names.size(); ++i)
        if (!seen.count(i)) missing.push_back(names[i]);
    if (!missing.empty()) problems.push_back("missing variables: " + join(missing));
    if (blocks.empty()) problems.push_back("partition has no blocks");
    if (!problems.empty()) throw ValidationError("invalid partition: " + join(problems));
    return resolved;
}

}  // namespace

Relabeling validate_partition(const std::vector<std::vector<std::string>>& blocks,
                              const std::vector<std::string>& names) {
    return Partition(resolve_names(blocks, names), names.size()).relabeling();
}

Partition partition_from_names(const std::vector<std::vector<std::string>>& blocks,
                               const std::vector<std::string>& names) {
    return Partition(resolve_names(blocks, names), names.size());
}

CholeskyFactor::CholeskyFactor(Matrix values, Partition partition)
    : values_(std::move(values)), partition_(std::move(partition)) {
    const std::size_t p = partition_.size();
    if (static_cast<std::size_t>(values_.rows()) != p || static_cast<std::size_t>(values_.cols()) != p)
        throw InputError("factor dimension does not match partition");
    if (!values_.allFinite()) throw InvariantError("factor has non-finite entries");
    std::vector<Edge> edges;
    for (std::size_t i = 0; i < p; ++i) {
        if (!(values_(idx(i), idx(i)) > 0.0))
            throw InvariantError("diagonal entry " + std::to_string(i + 1) + " is not positive");
        for (std::size_t j = 0; j < p; ++j) {
            if (i == j || values_(idx(i), idx(j)) == 0.0) continue;
            const std::size_t bi = partition_.block_of(i);
            const std::size_t bj = partition_.block_of(j);
            if (bi < bj)
                throw InvariantError("entry (" + std::to_string(i + 1) + ", " +
                                     std::to_string(j + 1) + ") violates the block ordering");
            if (bi == bj && j > i && values_(idx(j), idx(i)) != 0.0)
                throw InvariantError("both (" + std::to_string(i + 1) + ", " + std::to_string(j + 1) +
                                     ") and its transpose are nonzero");
            edges.push_back({j, i, values_(idx(i), idx(j))});
        }
    }
    if (auto cycle = find_cycle(p, edges)) {
        std::ostringstream msg;
        msg << "factor graph has a directed cycle:";
        for (std::size_t v : *cycle) msg << ' ' << v + 1;
        throw InvariantError(msg.str());
    }
}

std::size_t CholeskyFactor::edge_count() const {
    std::size_t count = 0;
    for (Eigen::Index i = 0; i < values_.rows(); ++i)
        for (Eigen::Index j = 0; j < values_.cols(); ++j)
            if (i != j && values_(i, j) != 0.0) ++count;
    return count;
}

void FitOptions::validate() const {
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw InputError("lambda must be finite and >= 0");
    if (!(tol > 0.0)) throw InputError("tol must be > 0");
    if (max_sweeps < 1) throw InputError("max_sweeps must be >= 1");
    if (thread_count < 1) throw InputError("thread_count must be >= 1");
}

namespace {

double row_objective(const Matrix& b, const Matrix& s, Eigen::Index i, double lambda) {
    const Eigen::Index p = b.cols();
    double quad = 0.0;
    for (Eigen::Index h = 0; h < p; ++h) quad += s(h, h) * b(i, h) * b(i, h);
    double cross = 0.0;
    for (Eigen::Index k = 0; k < p; ++k) {
        if (b(i, k) == 0.0) continue;
        for (Eigen::Index l = k + 1; l < p; ++l) cross += s(k, l) * b(i, k) * b(i, l);
    }
    double penalty = 0.0;
    for (Eigen::Index j = 0; j < p; ++j)
        if (j != i) penalty += std::abs(b(i, j));
    return quad + 2.0 * cross - std::log(b(i, i)) + lambda * penalty;
}

void check_objective_args(const Matrix& b, const SampleCovariance& s) {
    if (b.rows() != b.cols() || static_cast<std::size_t>(b.rows()) != s.size())
        throw InputError("factor and covariance dimensions differ");
    for (Eigen::Index i = 0; i < b.rows(); ++i)
        if (!(b(i, i) > 0.0))
            throw DomainError("diagonal entry " + std::to_string(i + 1) + " is not positive");
}

}  // namespace

double objective(const Matrix& b, const SampleCovariance& s, double lambda) {
    check_objective_args(b, s);
    double total = 0.0;
    for (Eigen::Index i = 0; i < b.rows(); ++i) total += row_objective(b, s.matrix(), i, lambda);
    return total;
}

double objective(const CholeskyFactor& b, const SampleCovariance& s, double lambda) {
    return objective(b.values(), s, lambda);
}

std::vector<double> objective_by_block_rows(const Matrix& b, const SampleCovariance& s,
                                            const Partition& partition, double lambda) {
    check_objective_args(b, s);
    if (partition.size() != s.size()) throw InputError("partition and covariance dimensions differ");
    std::vector<double> parts(partition.block_count(), 0.0);
    for (std::size_t r = 0; r < partition.block_count(); ++r)
        for (std::size_t i : partition.blocks()[r])
            parts[r] += row_objective(b, s.matrix(), idx(i), lambda);
    return parts;
}

}  // namespace pdag
