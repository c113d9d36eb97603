#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "cardiotwin/analysis.hpp"
#include "cardiotwin/solver.hpp"

namespace cardiotwin {

/// A trajectory read back from CSV. Unlike Trajectory it carries explicit
/// pressure/volume channels, because the file does not store the generating
/// parameters.
struct StateSeries {
    double t0 = 0.0;
    double dt = 0.0;
    std::size_t dim = 0;
    std::vector<double> states;  // sample-major, size() * dim
    std::vector<double> p_lv;
    std::vector<double> v_lv;

    std::size_t size() const { return dim == 0 ? 0 : states.size() / dim; }
    double component(std::size_t k, std::size_t j) const { return states[k * dim + j]; }
};

/// Columns t,x1..x{dim},p_lv,v_lv. Metadata comments carry the grid, the
/// generating-config hash, and any extra key=value pairs (seeds etc).
void write_trajectory_csv(const std::string& path, const Trajectory& traj, const std::string& tool,
                          const std::map<std::string, std::string>& extra_meta = {});

/// Reads a trajectory CSV back; validates the uniform time grid and finite
/// values. dim is 6 when an x6 column is present, else 5.
StateSeries read_trajectory_csv(const std::string& path);

/// Columns phase,v_lv,p_lv; the loop's cycle index rides in the metadata.
void write_pv_loop_csv(const std::string& path, const PvLoop& loop, const std::string& tool,
                       const std::map<std::string, std::string>& extra_meta = {});

PvLoop read_pv_loop_csv(const std::string& path);

}  // namespace cardiotwin
