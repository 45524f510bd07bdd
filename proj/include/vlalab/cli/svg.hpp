#pragma once

#include <string>
#include <vector>

namespace vlalab::cli {

struct BarSeries {
    std::string name;
    std::vector<double> values;  // one per group
};

// Minimal static bar chart: one cluster per group label, one bar per series.
void write_svg_bar_chart(const std::string& path, const std::string& title, const std::vector<std::string>& groups,
                         const std::vector<BarSeries>& series, const std::string& y_label);

}  // namespace vlalab::cli
