#include "vlalab/cli/svg.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace vlalab::cli {

namespace {
const char* kPalette[] = {"#4c78a8", "#f58518", "#54a24b", "#e45756", "#72b7b2", "#b279a2"};

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return buf;
}
}  // namespace

void write_svg_bar_chart(const std::string& path, const std::string& title, const std::vector<std::string>& groups,
                         const std::vector<BarSeries>& series, const std::string& y_label) {
    if (series.empty() || groups.empty()) throw std::invalid_argument("svg chart: empty groups or series");
    for (const auto& s : series)
        if (s.values.size() != groups.size())
            throw std::invalid_argument("svg chart: series '" + s.name + "' has " + std::to_string(s.values.size()) +
                                        " values for " + std::to_string(groups.size()) + " groups");

    double vmax = 0;
    for (const auto& s : series)
        for (double v : s.values) vmax = std::max(vmax, v);
    if (vmax <= 0) vmax = 1.0;

    const int W = 640, H = 360;
    const int ml = 70, mr = 20, mt = 50, mb = 70;
    const double plot_w = W - ml - mr, plot_h = H - mt - mb;
    double group_w = plot_w / static_cast<double>(groups.size());
    double bar_w = group_w * 0.8 / static_cast<double>(series.size());

    std::ofstream os(path);
    if (!os) throw std::runtime_error("svg chart: cannot open '" + path + "'");
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
    os << "<rect width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
    os << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\" font-family=\"sans-serif\">"
       << title << "</text>\n";
    os << "<text x=\"16\" y=\"" << mt + plot_h / 2 << "\" text-anchor=\"middle\" font-size=\"12\" "
       << "font-family=\"sans-serif\" transform=\"rotate(-90 16 " << mt + plot_h / 2 << ")\">" << y_label << "</text>\n";

    // gridlines with value labels
    for (int g = 0; g <= 4; ++g) {
        double frac = static_cast<double>(g) / 4.0;
        double y = mt + plot_h * (1.0 - frac);
        os << "<line x1=\"" << ml << "\" y1=\"" << y << "\" x2=\"" << W - mr << "\" y2=\"" << y
           << "\" stroke=\"#dddddd\"/>\n";
        os << "<text x=\"" << ml - 6 << "\" y=\"" << y + 4 << "\" text-anchor=\"end\" font-size=\"10\" "
           << "font-family=\"sans-serif\">" << fmt(vmax * frac) << "</text>\n";
    }

    for (size_t gi = 0; gi < groups.size(); ++gi) {
        double gx = ml + group_w * (static_cast<double>(gi) + 0.1);
        for (size_t si = 0; si < series.size(); ++si) {
            double v = series[si].values[gi];
            double h = plot_h * (v / vmax);
            double x = gx + bar_w * static_cast<double>(si);
            double y = mt + plot_h - h;
            os << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << bar_w * 0.92 << "\" height=\"" << h
               << "\" fill=\"" << kPalette[si % 6] << "\"/>\n";
        }
        os << "<text x=\"" << ml + group_w * (static_cast<double>(gi) + 0.5) << "\" y=\"" << H - mb + 16
           << "\" text-anchor=\"middle\" font-size=\"10\" font-family=\"sans-serif\">" << groups[gi] << "</text>\n";
    }

    // legend
    for (size_t si = 0; si < series.size(); ++si) {
        double y = H - mb + 34 + 0;
        double x = ml + static_cast<double>(si) * 150;
        os << "<rect x=\"" << x << "\" y=\"" << y - 9 << "\" width=\"10\" height=\"10\" fill=\"" << kPalette[si % 6]
           << "\"/>\n";
        os << "<text x=\"" << x + 14 << "\" y=\"" << y << "\" font-size=\"11\" font-family=\"sans-serif\">"
           << series[si].name << "</text>\n";
    }
    os << "</svg>\n";
}

}  // namespace vlalab::cli
