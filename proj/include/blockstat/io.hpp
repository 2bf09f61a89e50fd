#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "blockstat/blocks.hpp"
#include "blockstat/dependence.hpp"
#include "blockstat/errors.hpp"
#include "blockstat/harness.hpp"
#include "blockstat/ustat.hpp"

namespace blockstat::io {

/// Shortest decimal form that round-trips a double exactly.
[[nodiscard]] inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline void write_series_csv(const std::string& path, std::span<const double> values) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << "x\n";
    for (double v : values) out << format_double(v) << "\n";
    if (!out) throw IoError("failed writing '" + path + "'");
}

[[nodiscard]] inline Series read_series_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "' for reading");
    std::string line;
    if (!std::getline(in, line)) throw IoError("'" + path + "': empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "x") {
        throw IoError("'" + path + "': expected header 'x', got '" + line + "'");
    }
    std::vector<double> values;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        char* end = nullptr;
        const double v = std::strtod(line.c_str(), &end);
        if (end == line.c_str() || *end != '\0') {
            throw IoError("'" + path + "' line " + std::to_string(line_no) +
                          ": cannot parse '" + line + "' as a number");
        }
        if (!std::isfinite(v)) {
            throw IoError("'" + path + "' line " + std::to_string(line_no) +
                          ": value is not finite");
        }
        values.push_back(v);
    }
    if (values.empty()) throw EmptySeriesError("'" + path + "': no observations");
    return Series{std::move(values)};
}

inline void write_profile_csv(const std::string& path, const dependence::DependenceProfile& prof) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << "i,delta,stderr\n";
    for (int i = -prof.window; i <= prof.window; ++i) {
        out << i << "," << format_double(prof.at(i)) << "," << format_double(prof.stderr_at(i))
            << "\n";
    }
    if (!out) throw IoError("failed writing '" + path + "'");
}

inline void write_column_csv(const std::string& path, const std::string& header,
                             std::span<const double> values) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << header << "\n";
    for (double v : values) out << format_double(v) << "\n";
    if (!out) throw IoError("failed writing '" + path + "'");
}

[[nodiscard]] inline nlohmann::ordered_json test_report_to_json(const ustat::TestReport& report) {
    nlohmann::ordered_json j;
    j["u_stat"] = report.u_stat;
    j["centering"] = report.centering;
    j["centering_method"] = report.centering_method;
    j["gamma_sq"] = report.gamma_sq;
    j["standardized"] = report.standardized;
    j["p_value"] = report.p_value;
    j["block_count"] = report.block_count;
    j["block_length"] = report.block_length;
    j["dropped"] = report.dropped;
    j["diagnostics"] = report.diagnostics;
    return j;
}

[[nodiscard]] inline nlohmann::ordered_json mc_report_to_json(const harness::McReport& report,
                                                              bool include_samples = true) {
    nlohmann::ordered_json j;
    j["scenario"] = report.scenario;
    j["replications"] = report.replications;
    j["seed"] = report.seed;
    j["reference_sd"] = report.reference_sd;
    j["ks"] = report.ks;
    j["ad"] = report.ad;
    j["mean"] = report.mean;
    j["variance"] = report.variance;
    j["rejection_rates"] = report.rejection_rates;
    j["diagnostics"] = report.diagnostics;
    if (include_samples) j["standardized"] = report.standardized;
    return j;
}

inline void write_json(const std::string& path, const nlohmann::ordered_json& j) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << j.dump(2) << "\n";
    if (!out) throw IoError("failed writing '" + path + "'");
}

[[nodiscard]] inline nlohmann::json read_json(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "' for reading");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw IoError("'" + path + "': " + e.what());
    }
    return j;
}

}  // namespace blockstat::io
