#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <vector>

#include "cardiotwin/errors.hpp"
#include "cardiotwin/model.hpp"

namespace cardiotwin {

/// Densely sampled solution on a fixed grid t_k = t0 + k*dt. States are
/// stored flat (sample-major); pressure/volume channels are derived on
/// access so they can never go stale against the stored states.
struct Trajectory {
    double t0 = 0.0;
    double dt = 0.0;
    std::size_t dim = 5;
    std::vector<double> data;  // size() * dim doubles
    PatientParams params;
    std::optional<LvadParams> lvad;

    std::size_t size() const { return dim == 0 ? 0 : data.size() / dim; }
    double time(std::size_t k) const { return t0 + static_cast<double>(k) * dt; }
    double duration() const { return size() < 2 ? 0.0 : static_cast<double>(size() - 1) * dt; }

    double component(std::size_t k, std::size_t j) const { return data[k * dim + j]; }

    CardiacState state(std::size_t k) const {
        CardiacState s(dim);
        for (std::size_t j = 0; j < dim; ++j) s[j] = data[k * dim + j];
        return s;
    }

    double v_lv(std::size_t k) const { return component(k, 0) + params.v_d; }

    double p_lv(std::size_t k) const {
        return component(k, 0) * elastance(ElastanceSpec::from(params), time(k));
    }
};

/// Classical fourth-order Runge-Kutta with a fixed step. Integrates from t0
/// until the largest t0 + k*dt <= t1 (a half-step epsilon absorbs roundoff in
/// the step count). Throws SimulationError at the first non-finite state.
///
/// Deterministic: identical inputs give bitwise-identical trajectories. Grid
/// times are computed as t0 + k*dt, not accumulated, so restarting from a
/// stored sample reproduces the tail to roundoff.
template <class Rhs>
std::vector<CardiacState> integrate_grid(Rhs&& rhs, const CardiacState& x0, double t0, double t1,
                                         double dt) {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw ValidationError("integrate: dt must be positive and finite");
    if (!(t1 >= t0)) throw ValidationError("integrate: t1 must be >= t0");

    const auto n_steps = static_cast<std::size_t>(std::floor((t1 - t0) / dt + 0.5e-9 * ((t1 - t0) / dt + 1.0)) + 1e-12);
    std::vector<CardiacState> out;
    out.reserve(n_steps + 1);
    out.push_back(x0);

    const std::size_t dim = x0.dim();
    CardiacState x = x0;
    for (std::size_t k = 0; k < n_steps; ++k) {
        const double t = t0 + static_cast<double>(k) * dt;
        const CardiacState k1 = rhs(t, x);
        CardiacState xa(dim);
        for (std::size_t j = 0; j < dim; ++j) xa[j] = x[j] + 0.5 * dt * k1[j];
        const CardiacState k2 = rhs(t + 0.5 * dt, xa);
        for (std::size_t j = 0; j < dim; ++j) xa[j] = x[j] + 0.5 * dt * k2[j];
        const CardiacState k3 = rhs(t + 0.5 * dt, xa);
        for (std::size_t j = 0; j < dim; ++j) xa[j] = x[j] + dt * k3[j];
        const CardiacState k4 = rhs(t + dt, xa);

        bool finite = true;
        for (std::size_t j = 0; j < dim; ++j) {
            x[j] += dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
            finite = finite && std::isfinite(x[j]);
        }
        if (!finite) throw SimulationError("integrate: state went non-finite", k + 1);
        out.push_back(x);
    }
    return out;
}

struct SimSettings {
    std::size_t n_cycles = 3;
    std::size_t steps_per_cycle = 2000;
};

/// Run the baseline circulation (or the LVAD-augmented one when `lvad` is
/// set) for n_cycles heartbeats from the end-diastolic initial condition.
Trajectory simulate_cycles(const PatientParams& params, const std::optional<LvadParams>& lvad = std::nullopt,
                           const SimSettings& sim = {});

}  // namespace cardiotwin
