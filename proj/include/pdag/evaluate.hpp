#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "pdag/graph.hpp"
#include "pdag/model.hpp"
#include "pdag/optimizer.hpp"

namespace pdag {

/// Label of the unordered pair {i, j}, i < j.
enum class PairClass { forward = 0, backward = 1, none = 2 };  // forward: i -> j

const char* to_string(PairClass c);

struct PairLabels {
    std::size_t p = 0;
    std::vector<PairClass> labels;  // pairs (0,1), (0,2), ..., (1,2), ... in row-major order

    static std::size_t pair_count(std::size_t p) { return p * (p - 1) / 2; }
    std::size_t index(std::size_t i, std::size_t j) const;
    PairClass at(std::size_t i, std::size_t j) const { return labels[index(i, j)]; }
    std::array<std::size_t, 3> counts() const;
};

/// Labels from the support of B. Throws InvariantError if both B_ij and B_ji are nonzero.
PairLabels classify_pairs(const CholeskyFactor& b);
/// Labels from a directed edge list. Throws InputError on two-way pairs or self-loops.
PairLabels classify_edges(std::size_t p, const std::vector<Edge>& edges);

struct RocPoint {
    double fpr = 0.0;
    double tpr = 0.0;
};

struct RocCurve {
    PairClass cls = PairClass::none;
    std::vector<RocPoint> points;  // sorted by FPR, ties by TPR ascending
    bool defined = false;
    double auc_normalized = 0.0;
    std::string warning;
};

/// One-vs-rest ROC of class `cls` over the predictions of a penalty path. The area is
/// integrated by trapezoids over the achieved points only and divided by the achieved
/// FPR span. Undefined (with a warning) when the class has no positives or negatives
/// in `truth` or the FPR span is zero.
RocCurve roc_points(std::span<const PairLabels> predictions, const PairLabels& truth, PairClass cls);
RocCurve roc_points(const FitPath& path, const PairLabels& truth, PairClass cls);

struct AucReport {
    double value = 0.0;  // mean of the defined class AUCs
    bool defined = false;
    std::array<RocCurve, 3> curves;
    std::vector<std::string> warnings;
};

AucReport auc_ma_report(std::span<const PairLabels> predictions, const PairLabels& truth);
AucReport auc_ma_report(const FitPath& path, const PairLabels& truth);
/// Macro-averaged AUC; NaN when no class curve is defined.
double auc_ma(const FitPath& path, const PairLabels& truth);

struct AuditEntry {
    std::size_t parent = 0;
    std::size_t child = 0;
    bool present = false;
};

struct KnownEdgeAudit {
    std::vector<AuditEntry> entries;  // in the order supplied
    std::size_t present = 0;
    double fraction = 0.0;
};

KnownEdgeAudit audit_known_edges(const CholeskyFactor& b, const std::vector<Edge>& known);

/// Edges of B divided by p(p-1)/2.
double edge_density(const CholeskyFactor& b);

}  // namespace pdag
