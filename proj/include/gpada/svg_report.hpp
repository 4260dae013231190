#pragma once

#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "gpada/metrics.hpp"

namespace gpada {

/// Accuracy-over-rounds line chart, one polyline per metrics series.
/// Standalone SVG, no external references.
inline void write_report_svg(const std::string& path,
                             const std::vector<std::pair<std::string, std::vector<RoundMetrics>>>& series) {
    if (series.empty()) fail("report: no metrics series given");
    for (const auto& [name, rounds] : series)
        if (rounds.empty()) fail("report: metrics series '" + name + "' is empty");

    int max_round = 1;
    double acc_min = 1.0, acc_max = 0.0;
    for (const auto& [name, rounds] : series) {
        for (const RoundMetrics& r : rounds) {
            max_round = std::max(max_round, r.round);
            acc_min = std::min(acc_min, r.target_accuracy);
            acc_max = std::max(acc_max, r.target_accuracy);
        }
    }
    acc_min = std::max(0.0, acc_min - 0.02);
    acc_max = std::min(1.0, acc_max + 0.02);
    if (acc_max - acc_min < 0.05) {
        const double mid = 0.5 * (acc_min + acc_max);
        acc_min = std::max(0.0, mid - 0.025);
        acc_max = std::min(1.0, mid + 0.025);
    }

    const double width = 860, height = 520;
    const double ml = 70, mr = 210, mt = 40, mb = 60;
    const double pw = width - ml - mr, ph = height - mt - mb;
    auto sx = [&](double round) {
        if (max_round == 1) return ml + pw / 2.0;
        return ml + pw * (round - 1.0) / (max_round - 1.0);
    };
    auto sy = [&](double acc) { return mt + ph * (1.0 - (acc - acc_min) / (acc_max - acc_min)); };
    auto fmt = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.2f", v);
        return std::string(buf);
    };

    static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                    "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};
    constexpr int palette_size = 8;

    std::ofstream out(path, std::ios::binary);
    if (!out) fail("report: cannot write file '" + path + "'");
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
        << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
    out << "<rect width=\"" << width << "\" height=\"" << height << "\" fill=\"white\"/>\n";
    out << "<text x=\"" << ml << "\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\">"
        << "Target accuracy over active-learning rounds</text>\n";

    // axes
    out << "<line x1=\"" << ml << "\" y1=\"" << mt + ph << "\" x2=\"" << ml + pw << "\" y2=\"" << mt + ph
        << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << mt + ph
        << "\" stroke=\"black\"/>\n";
    for (int r = 1; r <= max_round; ++r) {
        out << "<line x1=\"" << fmt(sx(r)) << "\" y1=\"" << mt + ph << "\" x2=\"" << fmt(sx(r))
            << "\" y2=\"" << mt + ph + 5 << "\" stroke=\"black\"/>\n";
        out << "<text x=\"" << fmt(sx(r)) << "\" y=\"" << mt + ph + 22
            << "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">" << r << "</text>\n";
    }
    for (int t = 0; t <= 5; ++t) {
        const double a = acc_min + (acc_max - acc_min) * t / 5.0;
        out << "<line x1=\"" << ml - 5 << "\" y1=\"" << fmt(sy(a)) << "\" x2=\"" << ml << "\" y2=\""
            << fmt(sy(a)) << "\" stroke=\"black\"/>\n";
        out << "<text x=\"" << ml - 10 << "\" y=\"" << fmt(sy(a) + 4)
            << "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"end\">" << fmt(a)
            << "</text>\n";
    }
    out << "<text x=\"" << ml + pw / 2 << "\" y=\"" << height - 14
        << "\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\">round</text>\n";

    for (std::size_t i = 0; i < series.size(); ++i) {
        const auto& [name, rounds] = series[i];
        const char* color = palette[i % palette_size];
        out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
        for (std::size_t k = 0; k < rounds.size(); ++k)
            out << (k ? " " : "") << fmt(sx(rounds[k].round)) << ',' << fmt(sy(rounds[k].target_accuracy));
        out << "\"/>\n";
        for (const RoundMetrics& r : rounds)
            out << "<circle cx=\"" << fmt(sx(r.round)) << "\" cy=\"" << fmt(sy(r.target_accuracy))
                << "\" r=\"3\" fill=\"" << color << "\"/>\n";
        const double ly = mt + 16 + 20.0 * static_cast<double>(i);
        out << "<rect x=\"" << ml + pw + 16 << "\" y=\"" << ly - 9 << "\" width=\"12\" height=\"12\" fill=\""
            << color << "\"/>\n";
        out << "<text x=\"" << ml + pw + 34 << "\" y=\"" << ly + 2
            << "\" font-family=\"sans-serif\" font-size=\"12\">" << name << "</text>\n";
    }
    out << "</svg>\n";
    if (!out) fail("report: write failure on '" + path + "'");
}

}  // namespace gpada
