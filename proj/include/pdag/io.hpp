#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "pdag/evaluate.hpp"
#include "pdag/graph.hpp"
#include "pdag/model.hpp"
#include "pdag/optimizer.hpp"
#include "pdag/simulate.hpp"

namespace pdag::io {

struct DataTable {
    std::vector<std::string> names;
    Matrix values;  // n x p
};

/// Header row of variable names, then one row of decimal numbers per observation.
/// Blank lines are skipped. Throws InputError with the offending line number.
DataTable read_csv(const std::filesystem::path& path);
void write_csv(const std::filesystem::path& path, const DataTable& table);
/// Variable names from a CSV header, or whitespace/comma separated names from any other file.
std::vector<std::string> read_variable_names(const std::filesystem::path& path);

/// One block per line, comma separated names, upstream block first. '#' starts a comment line.
std::vector<std::vector<std::string>> read_partition_file(const std::filesystem::path& path);
void write_partition_file(const std::filesystem::path& path,
                          const std::vector<std::vector<std::string>>& blocks);

struct NamedEdges {
    std::vector<std::string> names;
    std::vector<Edge> edges;
};

/// "parent child [weight]" per line (tabs, spaces or commas). Endpoints are variable names
/// when `names` is given (1-based labels are accepted as a fallback); otherwise either all
/// endpoints are 1-based labels (p = largest label unless `min_p` is larger) or names
/// in order of first appearance.
NamedEdges read_edge_list(const std::filesystem::path& path, const std::vector<std::string>& names = {},
                          std::size_t min_p = 0);

/// "parent<TAB>child<TAB>weight" with 10 significant digits, no header.
void write_edges_tsv(const std::filesystem::path& path, const std::vector<Edge>& edges,
                     const std::vector<std::string>& names);
std::string format_weight(double w);

nlohmann::json options_json(const FitOptions& options, bool center);
nlohmann::json fit_json(const FitResult& result, const std::vector<std::string>& names);
nlohmann::json auc_json(const AucReport& report);
nlohmann::json audit_json(const KnownEdgeAudit& audit, const std::vector<std::string>& names);
nlohmann::json experiment_json(const ExperimentReport& report, bool with_timing);

/// Aligned "Method  Sample size  AUC-MA" table, grouped by sample size.
std::string experiment_table(const ExperimentReport& report);
/// "( a , b )  Pres  Abs ..." rows with one column per audited network.
std::string audit_table(const std::vector<std::string>& names, const std::vector<Edge>& known,
                        const std::vector<std::pair<std::string, KnownEdgeAudit>>& audits);

void write_json(const std::filesystem::path& path, const nlohmann::json& value);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace pdag::io
