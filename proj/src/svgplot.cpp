#include "netpulse/svgplot.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace netpulse {

namespace {

constexpr double kWidth = 640.0, kHeight = 400.0, kMargin = 50.0;
const char* kPalette[] = {"#1f6fb2", "#d1495b", "#3a7d44", "#8d6a9f", "#c88b2e", "#4a4a4a"};

struct Scale {
    double lo, hi, px_lo, px_hi;
    double operator()(double v) const {
        return px_lo + (v - lo) / (hi - lo) * (px_hi - px_lo);
    }
};

std::string svg_open() {
    return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"400\" "
           "viewBox=\"0 0 640 400\">\n"
           "<rect width=\"640\" height=\"400\" fill=\"white\"/>\n";
}

std::string axes() {
    return "<line x1=\"50\" y1=\"350\" x2=\"590\" y2=\"350\" stroke=\"black\"/>\n"
           "<line x1=\"50\" y1=\"50\" x2=\"50\" y2=\"350\" stroke=\"black\"/>\n";
}

std::string polyline(const std::vector<std::pair<double, double>>& pts, const char* color) {
    std::string s = "<polyline fill=\"none\" stroke=\"";
    s += color;
    s += "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < pts.size(); ++i) {
        if (i) s += ' ';
        s += format_double(std::round(pts[i].first * 100.0) / 100.0);
        s += ',';
        s += format_double(std::round(pts[i].second * 100.0) / 100.0);
    }
    s += "\"/>\n";
    return s;
}

std::pair<double, double> expand(double lo, double hi) {
    if (hi > lo) return {lo, hi};
    return {lo - 0.5, hi + 0.5}; // flat data still gets a drawable range
}

} // namespace

std::string render_line_svg(const CsvTable& table) {
    if (table.rows() == 0) throw std::runtime_error("plot: no data rows");
    if (table.header().size() < 2)
        throw std::runtime_error("plot: line input needs an x column and at least one series");

    const std::size_t n = table.rows(), m = table.header().size();
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = table.num(i, 0);
    double x_lo = *std::min_element(x.begin(), x.end());
    double x_hi = *std::max_element(x.begin(), x.end());
    double y_lo = table.num(0, 1), y_hi = y_lo;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t c = 1; c < m; ++c) {
            const double v = table.num(i, c);
            y_lo = std::min(y_lo, v);
            y_hi = std::max(y_hi, v);
        }
    std::tie(x_lo, x_hi) = expand(x_lo, x_hi);
    std::tie(y_lo, y_hi) = expand(y_lo, y_hi);

    const Scale sx{x_lo, x_hi, kMargin, kWidth - kMargin};
    const Scale sy{y_lo, y_hi, kHeight - kMargin, kMargin};

    std::string svg = svg_open() + axes();
    for (std::size_t c = 1; c < m; ++c) {
        std::vector<std::pair<double, double>> pts(n);
        for (std::size_t i = 0; i < n; ++i) pts[i] = {sx(x[i]), sy(table.num(i, c))};
        svg += polyline(pts, kPalette[(c - 1) % (sizeof kPalette / sizeof *kPalette)]);
    }
    return svg + "</svg>\n";
}

std::string render_density_svg(const CsvTable& table, const std::string& column, int bins) {
    if (table.rows() == 0) throw std::runtime_error("plot: no data rows");
    if (bins < 1) throw std::runtime_error("plot: bins must be positive");
    const std::size_t col =
        column.empty() ? table.header().size() - 1 : table.column(column);

    const std::size_t n = table.rows();
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = table.num(i, col);
    auto [lo, hi] = expand(*std::min_element(v.begin(), v.end()),
                           *std::max_element(v.begin(), v.end()));
    const double width = (hi - lo) / bins;
    std::vector<double> density(static_cast<std::size_t>(bins), 0.0);
    for (double x : v) {
        auto b = static_cast<std::size_t>(std::min<double>((x - lo) / width, bins - 1));
        density[b] += 1.0;
    }
    double peak = 0.0;
    for (auto& d : density) {
        d /= static_cast<double>(n) * width;
        peak = std::max(peak, d);
    }

    const Scale sx{lo, hi, kMargin, kWidth - kMargin};
    const Scale sy{0.0, peak > 0 ? peak : 1.0, kHeight - kMargin, kMargin};

    // step outline of the histogram, closed down to the baseline
    std::vector<std::pair<double, double>> pts;
    pts.emplace_back(sx(lo), sy(0.0));
    for (int b = 0; b < bins; ++b) {
        const double d = density[static_cast<std::size_t>(b)];
        pts.emplace_back(sx(lo + b * width), sy(d));
        pts.emplace_back(sx(lo + (b + 1) * width), sy(d));
    }
    pts.emplace_back(sx(hi), sy(0.0));

    return svg_open() + axes() + polyline(pts, kPalette[0]) + "</svg>\n";
}

std::string render_plot(const CsvTable& table, const std::string& kind,
                        const std::string& column) {
    if (kind == "line") return render_line_svg(table);
    if (kind == "density") return render_density_svg(table, column);
    throw std::runtime_error("plot: unknown kind '" + kind + "' (valid: line, density)");
}

} // namespace netpulse
