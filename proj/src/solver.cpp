#include "cardiotwin/solver.hpp"

namespace cardiotwin {

Trajectory simulate_cycles(const PatientParams& params, const std::optional<LvadParams>& lvad,
                           const SimSettings& sim) {
    params.validate();
    if (lvad) lvad->validate();
    if (sim.n_cycles < 1) throw ValidationError("simulate_cycles: n_cycles must be >= 1");
    if (sim.steps_per_cycle < 2) throw ValidationError("simulate_cycles: steps_per_cycle must be >= 2");

    const double dt = params.t_c / static_cast<double>(sim.steps_per_cycle);
    const double t_end = static_cast<double>(sim.n_cycles) * params.t_c;
    const CardiacState x0 = initial_state(params, lvad.has_value());

    std::vector<CardiacState> states;
    if (lvad) {
        states = integrate_grid(
            [&](double t, const CardiacState& x) { return rhs6(t, x, params, *lvad); }, x0, 0.0, t_end, dt);
    } else {
        states = integrate_grid(
            [&](double t, const CardiacState& x) { return rhs5(t, x, params); }, x0, 0.0, t_end, dt);
    }

    Trajectory traj;
    traj.t0 = 0.0;
    traj.dt = dt;
    traj.dim = x0.dim();
    traj.params = params;
    traj.lvad = lvad;
    traj.data.reserve(states.size() * traj.dim);
    for (const CardiacState& s : states) {
        for (std::size_t j = 0; j < traj.dim; ++j) traj.data.push_back(s[j]);
    }
    return traj;
}

}  // namespace cardiotwin
