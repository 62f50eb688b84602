#pragma once

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "halting/harness.hpp"
#include "halting/stats.hpp"

namespace halting::csv {

// Shortest representation that round-trips a double exactly.
inline std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline std::string emit_records(const std::vector<harness::TrialRecord>& records) {
    std::ostringstream out;
    out << "experiment_id,trial_index,halting_time,converged,final_value,wall_time_ms\n";
    for (const auto& r : records)
        out << r.experiment_id << ',' << r.trial_index << ',' << r.halting_time << ','
            << (r.converged ? 1 : 0) << ',' << format_double(r.final_value) << ','
            << r.wall_time_ms << '\n';
    return out.str();
}

inline std::vector<harness::TrialRecord> parse_records(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) ||
        line != "experiment_id,trial_index,halting_time,converged,final_value,wall_time_ms")
        throw std::runtime_error("parse_records: bad header");
    std::vector<harness::TrialRecord> out;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        harness::TrialRecord r;
        std::string field;
        std::getline(ls, r.experiment_id, ',');
        std::getline(ls, field, ',');
        r.trial_index = std::stoi(field);
        std::getline(ls, field, ',');
        r.halting_time = std::stoi(field);
        std::getline(ls, field, ',');
        r.converged = field == "1";
        std::getline(ls, field, ',');
        r.final_value = std::stod(field);
        std::getline(ls, field, ',');
        r.wall_time_ms = std::stoll(field);
        out.push_back(std::move(r));
    }
    return out;
}

// Summary row: model,ensemble,count,mean,std,skewness,kurtosis.
inline std::string summary_header() {
    return "model,ensemble,count,mean,std,skewness,kurtosis\n";
}

inline std::string emit_summary_row(const std::string& model, const std::string& ensemble,
                                    const stats::MomentSummary& m) {
    std::ostringstream out;
    out << model << ',' << ensemble << ',' << m.count << ',' << format_double(m.mean) << ','
        << format_double(m.std) << ',' << format_double(m.skewness) << ','
        << format_double(m.kurtosis) << '\n';
    return out.str();
}

inline std::string emit_histogram(const std::vector<stats::HistogramBin>& bins) {
    std::ostringstream out;
    out << "bin_center,density\n";
    for (const auto& b : bins)
        out << format_double(b.center) << ',' << format_double(b.density) << '\n';
    return out.str();
}

inline std::string emit_normalized(const stats::NormalizedSample& s) {
    std::ostringstream out;
    for (double v : s.values) out << format_double(v) << '\n';
    return out.str();
}

inline stats::NormalizedSample parse_normalized(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    stats::NormalizedSample s;
    while (std::getline(in, line))
        if (!line.empty()) s.values.push_back(std::stod(line));
    return s;
}

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << content;
    if (!out) throw std::runtime_error("write failed: " + path);
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace halting::csv
