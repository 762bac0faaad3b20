#include "pdag/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <unordered_map>

namespace pdag::io {

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, sep)) out.push_back(trim(field));
    if (!line.empty() && line.back() == sep) out.emplace_back();
    return out;
}

std::vector<std::string> tokens(const std::string& line) {
    std::string copy = line;
    std::replace(copy.begin(), copy.end(), ',', ' ');
    std::replace(copy.begin(), copy.end(), '\t', ' ');
    std::istringstream in(copy);
    std::vector<std::string> out;
    for (std::string t; in >> t;) out.push_back(t);
    return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open '" + path.string() + "'");
    return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write '" + path.string() + "'");
    return out;
}

bool parse_double(const std::string& text, double& value) {
    const char* begin = text.data();
    const char* end = begin + text.size();
    auto [ptr, ec] = std::from_chars(begin, end, value);
    return ec == std::errc() && ptr == end;
}

bool parse_label(const std::string& text, std::size_t& value) {
    const char* begin = text.data();
    const char* end = begin + text.size();
    auto [ptr, ec] = std::from_chars(begin, end, value);
    return ec == std::errc() && ptr == end && value >= 1;
}

bool is_comment(const std::string& line) {
    const std::string t = trim(line);
    return t.empty() || t.front() == '#';
}

}  // namespace

DataTable read_csv(const std::filesystem::path& path) {
    auto in = open_in(path);
    std::string line;
    std::size_t line_no = 0;
    DataTable table;
    while (std::getline(in, line)) {
        ++line_no;
        if (!trim(line).empty()) break;
    }
    if (trim(line).empty()) throw InputError(path.string() + ": missing header row");
    table.names = split(trim(line), ',');
    {
        std::vector<std::string> sorted = table.names;
        std::sort(sorted.begin(), sorted.end());
        for (std::size_t k = 0; k < sorted.size(); ++k) {
            if (sorted[k].empty()) throw InputError(path.string() + ": empty variable name in header");
            if (k && sorted[k] == sorted[k - 1])
                throw InputError(path.string() + ": duplicate variable name '" + sorted[k] + "'");
        }
    }
    const std::size_t p = table.names.size();
    std::vector<double> values;
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto fields = split(trim(line), ',');
        if (fields.size() != p)
            throw InputError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                             std::to_string(p) + " fields, found " + std::to_string(fields.size()));
        for (const auto& f : fields) {
            double v = 0.0;
            if (!parse_double(f, v) || !std::isfinite(v))
                throw InputError(path.string() + ":" + std::to_string(line_no) + ": bad number '" + f + "'");
            values.push_back(v);
        }
        ++rows;
    }
    table.values.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(p));
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < p; ++c)
            table.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = values[r * p + c];
    return table;
}

void write_csv(const std::filesystem::path& path, const DataTable& table) {
    auto out = open_out(path);
    for (std::size_t k = 0; k < table.names.size(); ++k) out << (k ? "," : "") << table.names[k];
    out << '\n';
    char buf[64];
    for (Eigen::Index r = 0; r < table.values.rows(); ++r) {
        for (Eigen::Index c = 0; c < table.values.cols(); ++c) {
            std::snprintf(buf, sizeof buf, "%.17g", table.values(r, c));
            out << (c ? "," : "") << buf;
        }
        out << '\n';
    }
}

std::vector<std::string> read_variable_names(const std::filesystem::path& path) {
    if (path.extension() == ".csv") {
        auto in = open_in(path);
        std::string line;
        while (std::getline(in, line))
            if (!trim(line).empty()) return split(trim(line), ',');
        throw InputError(path.string() + ": missing header row");
    }
    auto in = open_in(path);
    std::vector<std::string> names;
    for (std::string line; std::getline(in, line);) {
        if (is_comment(line)) continue;
        for (auto& t : tokens(line)) names.push_back(t);
    }
    return names;
}

std::vector<std::vector<std::string>> read_partition_file(const std::filesystem::path& path) {
    auto in = open_in(path);
    std::vector<std::vector<std::string>> blocks;
    for (std::string line; std::getline(in, line);) {
        if (is_comment(line)) continue;
        std::vector<std::string> block;
        for (auto& name : split(trim(line), ','))
            if (!name.empty()) block.push_back(name);
        blocks.push_back(std::move(block));
    }
    return blocks;
}

void write_partition_file(const std::filesystem::path& path,
                          const std::vector<std::vector<std::string>>& blocks) {
    auto out = open_out(path);
    for (const auto& block : blocks) {
        for (std::size_t k = 0; k < block.size(); ++k) out << (k ? "," : "") << block[k];
        out << '\n';
    }
}

NamedEdges read_edge_list(const std::filesystem::path& path, const std::vector<std::string>& names,
                          std::size_t min_p) {
    auto in = open_in(path);
    std::vector<std::vector<std::string>> rows;
    std::vector<std::size_t> line_numbers;
    std::size_t line_no = 0;
    for (std::string line; std::getline(in, line);) {
        ++line_no;
        if (is_comment(line)) continue;
        auto t = tokens(line);
        if (t.size() < 2 || t.size() > 3)
            throw InputError(path.string() + ":" + std::to_string(line_no) +
                             ": expected 'parent child [weight]'");
        rows.push_back(std::move(t));
        line_numbers.push_back(line_no);
    }

    NamedEdges out;
    out.names = names;
    std::unordered_map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < names.size(); ++i) index.emplace(names[i], i);

    bool numeric = names.empty();
    std::size_t max_label = 0;
    for (const auto& row : rows) {
        for (std::size_t k = 0; k < 2; ++k) {
            std::size_t label = 0;
            if (parse_label(row[k], label))
                max_label = std::max(max_label, label);
            else
                numeric = false;
        }
    }
    if (numeric) {
        const std::size_t p = std::max(max_label, min_p);
        for (std::size_t i = 1; i <= p; ++i) out.names.push_back(std::to_string(i));
        for (std::size_t i = 0; i < p; ++i) index.emplace(out.names[i], i);
    }

    const bool open_vocabulary = names.empty() && !numeric;
    for (std::size_t r = 0; r < rows.size(); ++r) {
        std::size_t ends[2] = {0, 0};
        for (std::size_t k = 0; k < 2; ++k) {
            const std::string& tok = rows[r][k];
            auto it = index.find(tok);
            std::size_t label = 0;
            if (it != index.end()) {
                ends[k] = it->second;
            } else if (open_vocabulary) {
                ends[k] = out.names.size();
                index.emplace(tok, ends[k]);
                out.names.push_back(tok);
            } else if (parse_label(tok, label) && label <= out.names.size()) {
                ends[k] = label - 1;
            } else {
                throw InputError(path.string() + ":" + std::to_string(line_numbers[r]) +
                                 ": unknown variable '" + tok + "'");
            }
        }
        double weight = 1.0;
        if (rows[r].size() == 3 && !parse_double(rows[r][2], weight))
            throw InputError(path.string() + ":" + std::to_string(line_numbers[r]) + ": bad weight '" +
                             rows[r][2] + "'");
        if (ends[0] == ends[1])
            throw InputError(path.string() + ":" + std::to_string(line_numbers[r]) + ": self-loop");
        out.edges.push_back({ends[0], ends[1], weight});
    }
    return out;
}

std::string format_weight(double w) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", w);
    return buf;
}

void write_edges_tsv(const std::filesystem::path& path, const std::vector<Edge>& edges,
                     const std::vector<std::string>& names) {
    auto out = open_out(path);
    for (const auto& e : edges)
        out << names.at(e.parent) << '\t' << names.at(e.child) << '\t' << format_weight(e.weight) << '\n';
}

nlohmann::json options_json(const FitOptions& options, bool center) {
    return {{"lambda", options.lambda},
            {"tol", options.tol},
            {"max_sweeps", options.max_sweeps},
            {"center", center}};
}

nlohmann::json fit_json(const FitResult& result, const std::vector<std::string>& names) {
    nlohmann::json j;
    j["lambda"] = result.lambda;
    j["objective"] = result.objective();
    j["sweeps"] = result.sweeps_used;
    j["converged"] = result.converged;
    j["final_change"] = result.final_change;
    j["max_kkt_residual"] = result.max_kkt_residual;
    j["edge_count"] = result.estimate.edge_count();
    j["density"] = edge_density(result.estimate);
    j["block_count"] = result.estimate.partition().block_count();
    nlohmann::json blocks = nlohmann::json::array();
    const auto& partition = result.estimate.partition();
    for (const auto& b : result.blocks) {
        nlohmann::json vars = nlohmann::json::array();
        for (std::size_t v : partition.blocks()[b.block]) vars.push_back(names.at(v));
        blocks.push_back({{"block", b.block + 1}, {"variables", vars}, {"sweeps", b.sweeps},
                          {"converged", b.converged}});
    }
    j["blocks"] = blocks;
    return j;
}

nlohmann::json auc_json(const AucReport& report) {
    nlohmann::json j;
    j["auc_ma"] = report.defined ? nlohmann::json(report.value) : nlohmann::json(nullptr);
    nlohmann::json classes = nlohmann::json::array();
    for (const auto& c : report.curves) {
        nlohmann::json pts = nlohmann::json::array();
        for (const auto& pt : c.points) pts.push_back({{"fpr", pt.fpr}, {"tpr", pt.tpr}});
        classes.push_back({{"class", to_string(c.cls)},
                           {"defined", c.defined},
                           {"auc", c.defined ? nlohmann::json(c.auc_normalized) : nlohmann::json(nullptr)},
                           {"points", pts}});
    }
    j["classes"] = classes;
    j["warnings"] = report.warnings;
    return j;
}

nlohmann::json audit_json(const KnownEdgeAudit& audit, const std::vector<std::string>& names) {
    nlohmann::json entries = nlohmann::json::array();
    for (const auto& e : audit.entries)
        entries.push_back({{"parent", names.at(e.parent)}, {"child", names.at(e.child)}, {"present", e.present}});
    return {{"known_edges", audit.entries.size()},
            {"present", audit.present},
            {"fraction", audit.fraction},
            {"edges", entries}};
}

nlohmann::json experiment_json(const ExperimentReport& report, bool with_timing) {
    nlohmann::json cells = nlohmann::json::array();
    auto num = [](double v) { return std::isnan(v) ? nlohmann::json(nullptr) : nlohmann::json(v); };
    for (const auto& c : report.cells) {
        nlohmann::json aucs = nlohmann::json::array();
        for (double a : c.auc) aucs.push_back(num(a));
        nlohmann::json cell = {{"partition", c.partition}, {"n", c.n}, {"mean_auc_ma", num(c.mean_auc)},
                               {"sd_auc_ma", c.sd_auc}, {"auc_ma", aucs}};
        if (with_timing) {
            cell["mean_seconds"] = c.mean_seconds;
            cell["seconds"] = c.seconds;
        }
        cells.push_back(cell);
    }
    return {{"p", report.p},
            {"true_edges", report.true_edges},
            {"seed", report.seed},
            {"replications", report.replications},
            {"grid_size", report.grid_size},
            {"cells", cells}};
}

std::string experiment_table(const ExperimentReport& report) {
    std::size_t width = std::string("Method").size();
    for (const auto& c : report.cells) width = std::max(width, c.partition.size());
    std::ostringstream out;
    out << std::left << std::setw(static_cast<int>(width)) << "Method" << "  " << std::right
        << std::setw(11) << "Sample size" << "  " << std::setw(8) << "AUC-MA" << "  " << std::setw(8) << "SD" << '\n';
    std::vector<std::size_t> ns;
    for (const auto& c : report.cells)
        if (std::find(ns.begin(), ns.end(), c.n) == ns.end()) ns.push_back(c.n);
    char buf[32];
    for (std::size_t n : ns) {
        for (const auto& c : report.cells) {
            if (c.n != n) continue;
            out << std::left << std::setw(static_cast<int>(width)) << c.partition << "  " << std::right
                << std::setw(11) << c.n << "  ";
            std::snprintf(buf, sizeof buf, "%8.4f", c.mean_auc);
            out << buf << "  ";
            std::snprintf(buf, sizeof buf, "%8.4f", c.sd_auc);
            out << buf << '\n';
        }
    }
    return out.str();
}

std::string audit_table(const std::vector<std::string>& names, const std::vector<Edge>& known,
                        const std::vector<std::pair<std::string, KnownEdgeAudit>>& audits) {
    std::vector<std::string> labels;
    std::size_t width = std::string("Edge (a -> b)").size();
    for (const auto& e : known) {
        labels.push_back("( " + names.at(e.parent) + " , " + names.at(e.child) + " )");
        width = std::max(width, labels.back().size());
    }
    std::ostringstream out;
    out << std::left << std::setw(static_cast<int>(width)) << "Edge (a -> b)";
    for (const auto& [label, audit] : audits) out << "  " << label;
    out << '\n';
    for (std::size_t k = 0; k < known.size(); ++k) {
        out << std::left << std::setw(static_cast<int>(width)) << labels[k];
        for (const auto& [label, audit] : audits)
            out << "  " << std::left << std::setw(static_cast<int>(label.size()))
                << (audit.entries.at(k).present ? "Pres" : "Abs");
        out << '\n';
    }
    out << std::left << std::setw(static_cast<int>(width)) << "present";
    for (const auto& [label, audit] : audits) {
        const std::string frac = std::to_string(audit.present) + "/" + std::to_string(audit.entries.size());
        out << "  " << std::left << std::setw(static_cast<int>(label.size())) << frac;
    }
    out << '\n';
    return out.str();
}

void write_json(const std::filesystem::path& path, const nlohmann::json& value) {
    auto out = open_out(path);
    out << value.dump(2) << '\n';
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    auto out = open_out(path);
    out << text;
}

}  // namespace pdag::io
