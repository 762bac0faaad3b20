#include "pdag/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace pdag {

const char* to_string(PairClass c) {
    switch (c) {
        case PairClass::forward: return "forward";
        case PairClass::backward: return "backward";
        case PairClass::none: return "none";
    }
    return "?";
}

std::size_t PairLabels::index(std::size_t i, std::size_t j) const {
    if (i >= j || j >= p) throw InputError("pair index needs i < j < p");
    // pairs before row i: sum_{r < i} (p - 1 - r)
    return i * (2 * p - i - 1) / 2 + (j - i - 1);
}

std::array<std::size_t, 3> PairLabels::counts() const {
    std::array<std::size_t, 3> out{};
    for (PairClass c : labels) ++out[static_cast<std::size_t>(c)];
    return out;
}

PairLabels classify_pairs(const CholeskyFactor& b) {
    const std::size_t p = b.size();
    PairLabels out{p, {}};
    out.labels.reserve(PairLabels::pair_count(p));
    for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t j = i + 1; j < p; ++j) {
            const bool i_to_j = b(j, i) != 0.0;
            const bool j_to_i = b(i, j) != 0.0;
            if (i_to_j && j_to_i)
                throw InvariantError("pair (" + std::to_string(i + 1) + ", " + std::to_string(j + 1) +
                                     ") has edges in both directions");
            out.labels.push_back(i_to_j ? PairClass::forward
                                        : (j_to_i ? PairClass::backward : PairClass::none));
        }
    }
    return out;
}

PairLabels classify_edges(std::size_t p, const std::vector<Edge>& edges) {
    PairLabels out{p, std::vector<PairClass>(PairLabels::pair_count(p), PairClass::none)};
    for (const auto& e : edges) {
        if (e.parent >= p || e.child >= p) throw InputError("edge endpoint out of range");
        if (e.parent == e.child) throw InputError("self-loop on variable " + std::to_string(e.parent + 1));
        const std::size_t i = std::min(e.parent, e.child);
        const std::size_t j = std::max(e.parent, e.child);
        const PairClass label = e.parent < e.child ? PairClass::forward : PairClass::backward;
        PairClass& slot = out.labels[out.index(i, j)];
        if (slot != PairClass::none && slot != label)
            throw InputError("pair (" + std::to_string(i + 1) + ", " + std::to_string(j + 1) +
                             ") has edges in both directions");
        slot = label;
    }
    return out;
}

RocCurve roc_points(std::span<const PairLabels> predictions, const PairLabels& truth, PairClass cls) {
    if (predictions.empty()) throw InputError("ROC needs at least one prediction");
    RocCurve curve;
    curve.cls = cls;
    std::size_t positives = 0;
    for (PairClass t : truth.labels) positives += t == cls;
    const std::size_t negatives = truth.labels.size() - positives;

    for (const auto& pred : predictions) {
        if (pred.p != truth.p) throw InputError("prediction and truth dimensions differ");
        std::size_t tp = 0;
        std::size_t fp = 0;
        for (std::size_t k = 0; k < truth.labels.size(); ++k) {
            if (pred.labels[k] != cls) continue;
            if (truth.labels[k] == cls)
                ++tp;
            else
                ++fp;
        }
        curve.points.push_back({negatives ? static_cast<double>(fp) / static_cast<double>(negatives) : 0.0,
                                positives ? static_cast<double>(tp) / static_cast<double>(positives) : 0.0});
    }
    std::sort(curve.points.begin(), curve.points.end(), [](const RocPoint& a, const RocPoint& b) {
        return a.fpr != b.fpr ? a.fpr < b.fpr : a.tpr < b.tpr;
    });

    if (positives == 0) {
        curve.warning = std::string("class ") + to_string(cls) + " has no positive pairs in the truth";
        return curve;
    }
    if (negatives == 0) {
        curve.warning = std::string("class ") + to_string(cls) + " has no negative pairs in the truth";
        return curve;
    }
    const double span = curve.points.back().fpr - curve.points.front().fpr;
    if (!(span > 0.0)) {
        curve.warning = std::string("class ") + to_string(cls) + " ROC has zero FPR span";
        return curve;
    }
    double area = 0.0;
    for (std::size_t k = 1; k < curve.points.size(); ++k) {
        const auto& a = curve.points[k - 1];
        const auto& b = curve.points[k];
        area += (b.fpr - a.fpr) * (a.tpr + b.tpr) / 2.0;
    }
    curve.defined = true;
    curve.auc_normalized = area / span;
    return curve;
}

namespace {

std::vector<PairLabels> labels_of(const FitPath& path) {
    std::vector<PairLabels> out;
    out.reserve(path.fits.size());
    for (const auto& f : path.fits) out.push_back(classify_pairs(f.estimate));
    return out;
}

}  // namespace

RocCurve roc_points(const FitPath& path, const PairLabels& truth, PairClass cls) {
    const auto labels = labels_of(path);
    return roc_points(std::span<const PairLabels>(labels), truth, cls);
}

AucReport auc_ma_report(std::span<const PairLabels> predictions, const PairLabels& truth) {
    AucReport report;
    double sum = 0.0;
    std::size_t defined = 0;
    for (std::size_t c = 0; c < 3; ++c) {
        report.curves[c] = roc_points(predictions, truth, static_cast<PairClass>(c));
        if (report.curves[c].defined) {
            sum += report.curves[c].auc_normalized;
            ++defined;
        } else {
            report.warnings.push_back(report.curves[c].warning + "; excluded from the macro average");
        }
    }
    report.defined = defined > 0;
    report.value = defined ? sum / static_cast<double>(defined) : std::numeric_limits<double>::quiet_NaN();
    return report;
}

AucReport auc_ma_report(const FitPath& path, const PairLabels& truth) {
    const auto labels = labels_of(path);
    return auc_ma_report(std::span<const PairLabels>(labels), truth);
}

double auc_ma(const FitPath& path, const PairLabels& truth) { return auc_ma_report(path, truth).value; }

KnownEdgeAudit audit_known_edges(const CholeskyFactor& b, const std::vector<Edge>& known) {
    KnownEdgeAudit audit;
    const std::size_t p = b.size();
    for (const auto& e : known) {
        if (e.parent >= p || e.child >= p) throw InputError("known edge endpoint out of range");
        const bool present = e.parent != e.child && b(e.child, e.parent) != 0.0;
        audit.entries.push_back({e.parent, e.child, present});
        audit.present += present;
    }
    audit.fraction = known.empty() ? 0.0 : static_cast<double>(audit.present) / static_cast<double>(known.size());
    return audit;
}

double edge_density(const CholeskyFactor& b) {
    const double p = static_cast<double>(b.size());
    if (b.size() < 2) return 0.0;
    return static_cast<double>(b.edge_count()) / (p * (p - 1.0) / 2.0);
}

}  // namespace pdag
