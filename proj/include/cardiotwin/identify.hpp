#pragma once

#include <array>
#include <map>
#include <optional>
#include <span>
#include <string>

#include "cardiotwin/solver.hpp"

namespace cardiotwin {

/// Elastance description read back from observables alone.
struct ElastanceRecovery {
    double v_d = 0.0;
    double e_max = 0.0;
    double e_min = 0.0;
    double t_c = 0.0;     // 0 when not periodic
    bool periodic = false;
};

/// Recover (v_d, E extrema, cycle length) from pressure/volume/charge series
/// on a uniform grid. v_d is the pointwise offset v_lv - x1 (must be
/// constant); E(t) = p_lv / (v_lv - v_d); the period is bracketed by an
/// autocorrelation peak and refined as the continuous lag minimizing the
/// series' self-shift mismatch; the extrema are taken over the last
/// recovered cycle. A flat E is reported with periodic=false.
ElastanceRecovery recover_elastance(std::span<const double> x1, std::span<const double> p_lv,
                                    std::span<const double> v_lv, double dt);

ElastanceRecovery recover_elastance(const Trajectory& traj);

/// Trapezoidal integral of exp(-s t) f(t) over the sampled horizon.
double truncated_laplace(std::span<const double> series, double dt, double s);

/// Static circuit constants recovered row by row from the Laplace-domain
/// balance s L(x) - x(0) = A L(x) + D L(q) at s in {2, 4, 8}. Each row is a
/// two-unknown least-squares problem; r_s is identified twice (atrial and
/// systemic rows) as a consistency witness.
struct StaticRecovery {
    double r_m = 0.0;
    double r_a = 0.0;
    double r_s = 0.0;        // from the atrial pressure row
    double r_s_systemic = 0.0;  // cross-check from the systemic row
    double c_r = 0.0;
    double c_s = 0.0;
    double c_a = 0.0;
    double l_s = 0.0;
    double r_c = 0.0;
    std::array<double, 5> row_rel_residual{};  // scaled residual per state row
};

StaticRecovery recover_static_params(const Trajectory& traj, std::span<const double> elastance_series,
                                     const std::array<double, 3>& s_values = {2.0, 4.0, 8.0});

/// Same recovery from raw sample-major state data (five channels per
/// sample), for trajectories read back from CSV.
StaticRecovery recover_static_params(std::span<const double> states, std::size_t dim, double dt,
                                     std::span<const double> elastance_series,
                                     const std::array<double, 3>& s_values = {2.0, 4.0, 8.0});

/// Full read-back: elastance first, then the statics using the recovered
/// E(t) series. With `truth` given, per-parameter relative errors are
/// attached for reporting.
struct RecoveredParams {
    ElastanceRecovery elastance;
    StaticRecovery statics;
    std::optional<std::map<std::string, double>> rel_errors;
};

RecoveredParams recover_all(const Trajectory& traj, const PatientParams* truth = nullptr);

/// Read-back from raw series (e.g. a trajectory CSV): five state channels
/// sample-major plus the observable pressure/volume channels.
RecoveredParams recover_all(std::span<const double> states, std::size_t dim, double dt,
                            std::span<const double> p_lv, std::span<const double> v_lv,
                            const PatientParams* truth = nullptr);

std::string recovered_to_json(const RecoveredParams& r, int indent = 2);

/// Solver settings recommended for recovery oracles. The long horizon shrinks
/// the truncation tail of the Laplace transforms. The fine step matters more:
/// with a small aortic resistance the open-valve pressure drop is a fraction
/// of a mmHg, and coarse steps make the valve argument chatter across zero,
/// clipping the rectified flow and poisoning the transforms that use it.
inline SimSettings recovery_sim_settings() { return {20, 8000}; }

}  // namespace cardiotwin
