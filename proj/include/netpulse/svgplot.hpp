#pragma once

#include <string>

#include "netpulse/csv.hpp"

namespace netpulse {

// first column is x, every further column a polyline
std::string render_line_svg(const CsvTable& table);

// histogram-based density of one column (default: the last)
std::string render_density_svg(const CsvTable& table, const std::string& column = "",
                               int bins = 32);

// kind is "line" or "density"; deterministic bytes for fixed input
std::string render_plot(const CsvTable& table, const std::string& kind,
                        const std::string& column = "");

} // namespace netpulse
