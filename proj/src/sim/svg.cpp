#include <vcrl/sim/svg.hpp>

#include <algorithm>
#include <cstdio>

namespace vcrl::sim {

namespace {

constexpr double width = 640.0;
constexpr double height = 400.0;
constexpr double margin = 56.0;
const char* const palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd"};

std::string num(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1f", v);
    return buf;
}

std::string escape(const std::string& s)
{
    std::string out;
    for (char c : s) {
        switch (c) {
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '&': out += "&amp;"; break;
        default: out += c;
        }
    }
    return out;
}

} // namespace

void write_line_chart(std::ostream& out, const std::string& title, const std::string& x_label,
                      const std::string& y_label, const std::vector<Series>& series)
{
    double xmax = 0.0;
    double ymax = 0.0;
    for (const auto& s : series) {
        for (const auto& [x, y] : s.points) {
            xmax = std::max(xmax, x);
            ymax = std::max(ymax, y);
        }
    }
    xmax = xmax > 0.0 ? xmax : 1.0;
    ymax = ymax > 0.0 ? ymax : 1.0;
    const double pw = width - 2 * margin;
    const double ph = height - 2 * margin;
    auto px = [&](double x) { return margin + pw * x / xmax; };
    auto py = [&](double y) { return height - margin - ph * y / ymax; };

    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
        << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" << escape(title)
        << "</text>\n";
    out << "<line x1=\"" << margin << "\" y1=\"" << height - margin << "\" x2=\"" << width - margin << "\" y2=\""
        << height - margin << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << margin << "\" y1=\"" << margin << "\" x2=\"" << margin << "\" y2=\"" << height - margin
        << "\" stroke=\"black\"/>\n";
    for (int t = 0; t <= 4; ++t) {
        const double fx = xmax * t / 4;
        const double fy = ymax * t / 4;
        out << "<text x=\"" << num(px(fx)) << "\" y=\"" << height - margin + 16
            << "\" text-anchor=\"middle\">" << num(fx) << "</text>\n";
        out << "<text x=\"" << margin - 6 << "\" y=\"" << num(py(fy) + 4) << "\" text-anchor=\"end\">"
            << (ymax <= 1.0 ? std::to_string(fy).substr(0, 4) : num(fy)) << "</text>\n";
    }
    out << "<text x=\"" << width / 2 << "\" y=\"" << height - 12 << "\" text-anchor=\"middle\">" << escape(x_label)
        << "</text>\n";
    out << "<text x=\"14\" y=\"" << height / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 14 "
        << height / 2 << ")\">" << escape(y_label) << "</text>\n";
    for (std::size_t i = 0; i < series.size(); ++i) {
        const char* color = palette[i % std::size(palette)];
        out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (const auto& [x, y] : series[i].points) {
            out << num(px(x)) << ',' << num(py(y)) << ' ';
        }
        out << "\"/>\n";
        out << "<text x=\"" << width - margin - 4 << "\" y=\"" << margin + 16 * (i + 1) << "\" text-anchor=\"end\" fill=\""
            << color << "\">" << escape(series[i].label) << "</text>\n";
    }
    out << "</svg>\n";
}

} // namespace vcrl::sim
