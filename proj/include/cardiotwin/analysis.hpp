#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "cardiotwin/solver.hpp"

namespace cardiotwin {

/// End-diastolic / end-systolic volume extrema over the final cycle.
struct EdEs {
    double v_ed = 0.0;
    double v_es = 0.0;
    double t_ed = 0.0;  // time of the maximum (first occurrence on ties)
    double t_es = 0.0;
};

/// One cycle of the pressure-volume orbit, sampled uniformly in cycle phase.
/// point i sits at phase i / (points.size() - 1), phases spanning [0, 1].
struct PvLoop {
    struct Point {
        double v_lv = 0.0;
        double p_lv = 0.0;
    };
    std::vector<Point> points;
    std::size_t cycle_index = 0;

    double phase(std::size_t i) const {
        return points.size() < 2 ? 0.0 : static_cast<double>(i) / static_cast<double>(points.size() - 1);
    }
};

/// Volume extrema over the final full cycle of a trajectory. Requires the
/// trajectory to span at least one cycle; enforces v_ed >= v_es > 0 (a
/// non-positive systolic volume means the run left the physiological regime).
EdEs ed_es_volumes(const Trajectory& traj);

/// (v_ed - v_es) / v_ed from raw volumes; only requires v_ed > 0 so it can
/// score model predictions that need not be ordered.
double ef_from_volumes(double v_ed, double v_es);

/// Ejection fraction of a valid extrema pair, in [0, 1).
double ejection_fraction(const EdEs& edes);

/// Pressure-volume orbit over the final full cycle, in time order.
PvLoop pv_loop(const Trajectory& traj);

/// Same orbit for an arbitrary completed cycle (0-based index).
PvLoop pv_loop(const Trajectory& traj, std::size_t cycle_index);

/// Linear resampling onto n points uniform in cycle phase.
PvLoop resample_loop(const PvLoop& loop, std::size_t n = 256);

/// Cohort-average loop: every loop is resampled to a common 256-point phase
/// grid and averaged pointwise.
PvLoop average_pv_loop(const std::vector<PvLoop>& loops);

/// Spearman rank correlation (average ranks on ties). NaN-free inputs only.
double spearman(std::span<const double> a, std::span<const double> b);

}  // namespace cardiotwin
