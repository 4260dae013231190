#pragma once

#include <fstream>
#include <string>
#include <vector>

#include "gpada/common.hpp"
#include "gpada/dataset.hpp"

namespace gpada {

/// One active-learning round's measurements.
struct RoundMetrics {
    int round = 0;
    std::vector<SampleId> queried_ids;  // in selection order
    std::int64_t plcs_count = 0;
    std::int64_t budget_spent = 0;  // cumulative
    double target_accuracy = 0.0;
    double mean_pv = 0.0;
    double selection_ms = 0.0;
    double train_loss = 0.0;
};

inline const char* metrics_csv_header() {
    return "round,queried_ids,plcs_count,budget_spent,target_accuracy,mean_pv,selection_ms,train_loss";
}

inline void write_metrics_csv(const std::string& path, const std::vector<RoundMetrics>& rounds) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail("metrics: cannot write file '" + path + "'");
    out << metrics_csv_header() << "\n";
    for (const RoundMetrics& r : rounds) {
        out << r.round << ',';
        for (std::size_t i = 0; i < r.queried_ids.size(); ++i)
            out << (i ? ";" : "") << r.queried_ids[i];
        out << ',' << r.plcs_count << ',' << r.budget_spent << ',' << format_double(r.target_accuracy)
            << ',' << format_double(r.mean_pv) << ',' << format_double(r.selection_ms) << ','
            << format_double(r.train_loss) << "\n";
    }
    if (!out) fail("metrics: write failure on '" + path + "'");
}

inline std::vector<RoundMetrics> read_metrics_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail("metrics: cannot open file '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) fail("metrics: empty file '" + path + "'");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != metrics_csv_header()) fail("metrics: malformed header in '" + path + "'");
    std::vector<RoundMetrics> rounds;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        std::vector<std::string> tok = detail::split_csv_line(line);
        if (tok.size() != 8)
            fail("metrics row " + std::to_string(row) + ": expected 8 fields, got " + std::to_string(tok.size()));
        RoundMetrics m;
        try {
            m.round = std::stoi(tok[0]);
            if (!tok[1].empty()) {
                std::size_t start = 0;
                while (start <= tok[1].size()) {
                    std::size_t pos = tok[1].find(';', start);
                    std::string part = tok[1].substr(start, pos == std::string::npos ? std::string::npos : pos - start);
                    m.queried_ids.push_back(static_cast<SampleId>(std::stoull(part)));
                    if (pos == std::string::npos) break;
                    start = pos + 1;
                }
            }
            m.plcs_count = std::stoll(tok[2]);
            m.budget_spent = std::stoll(tok[3]);
            m.target_accuracy = std::stod(tok[4]);
            m.mean_pv = std::stod(tok[5]);
            m.selection_ms = std::stod(tok[6]);
            m.train_loss = std::stod(tok[7]);
        } catch (const std::exception&) {
            fail("metrics row " + std::to_string(row) + ": malformed value");
        }
        rounds.push_back(std::move(m));
    }
    return rounds;
}

}  // namespace gpada
