#pragma once

#include <string>
#include <vector>

#include "cardiotwin/analysis.hpp"

namespace cardiotwin {

/// Renders PV loops as a standalone SVG: volume (ml) on x, pressure (mmHg)
/// on y, one polyline per loop, legend from the labels. Axis ranges are the
/// pooled data extrema padded by 5%. Output is byte-deterministic for
/// identical input (fixed layout, fixed palette, fixed number formatting).
std::string pv_loops_svg(const std::vector<PvLoop>& loops, const std::vector<std::string>& labels,
                         const std::string& title = "");

void write_pv_loops_svg(const std::string& path, const std::vector<PvLoop>& loops,
                        const std::vector<std::string>& labels, const std::string& title = "");

}  // namespace cardiotwin
