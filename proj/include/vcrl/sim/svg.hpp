#pragma once

#include <ostream>
#include <string>
#include <utility>
#include <vector>

namespace vcrl::sim {

struct Series {
    std::string label;
    std::vector<std::pair<double, double>> points;
};

/// Minimal SVG line chart; axes start at zero and scale to the data.
void write_line_chart(std::ostream& out, const std::string& title, const std::string& x_label,
                      const std::string& y_label, const std::vector<Series>& series);

} // namespace vcrl::sim
