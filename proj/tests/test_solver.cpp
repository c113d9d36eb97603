#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "cardiotwin/errors.hpp"
#include "cardiotwin/solver.hpp"

using namespace cardiotwin;

namespace {

CardiacState scalar_state(double v) {
    CardiacState x(1);
    x[0] = v;
    return x;
}

}  // namespace

TEST_CASE("integrator reproduces exponential decay to near roundoff") {
    const auto rhs = [](double, const CardiacState& x) {
        CardiacState d(1);
        d[0] = -x[0];
        return d;
    };
    const auto states = integrate_grid(rhs, scalar_state(1.0), 0.0, 1.0, 1e-3);
    REQUIRE(states.size() == 1001);
    CHECK(states.back()[0] == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
}

TEST_CASE("integrator tracks an undamped oscillator for a full revolution") {
    const auto rhs = [](double, const CardiacState& x) {
        CardiacState d(2);
        d[0] = x[1];
        d[1] = -x[0];
        return d;
    };
    CardiacState x0(2);
    x0[0] = 1.0;
    x0[1] = 0.0;
    const double period = 2.0 * std::numbers::pi;
    const auto states = integrate_grid(rhs, x0, 0.0, period, period / 1000.0);
    CHECK(states.back()[0] == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(std::abs(states.back()[1]) < 1e-9);
}

TEST_CASE("integrator lands exactly on the grid point count") {
    const auto rhs = [](double, const CardiacState& x) {
        CardiacState d(1);
        d[0] = -x[0];
        return d;
    };
    SUBCASE("clean divisor") {
        CHECK(integrate_grid(rhs, scalar_state(1.0), 0.0, 1.0, 0.1).size() == 11);
    }
    SUBCASE("repeating-fraction divisor") {
        CHECK(integrate_grid(rhs, scalar_state(1.0), 0.0, 1.0, 1.0 / 3.0).size() == 4);
    }
    SUBCASE("zero-length horizon") {
        CHECK(integrate_grid(rhs, scalar_state(1.0), 2.0, 2.0, 0.1).size() == 1);
    }
}

TEST_CASE("integrator rejects bad grids") {
    const auto rhs = [](double, const CardiacState& x) { return x; };
    CHECK_THROWS_AS(integrate_grid(rhs, scalar_state(1.0), 0.0, 1.0, 0.0), ValidationError);
    CHECK_THROWS_AS(integrate_grid(rhs, scalar_state(1.0), 0.0, 1.0, -0.1), ValidationError);
    CHECK_THROWS_AS(integrate_grid(rhs, scalar_state(1.0), 1.0, 0.0, 0.1), ValidationError);
}

TEST_CASE("integrator reports the step at which the state blew up") {
    // Quadratic growth from 1 escapes to infinity just past t = 1.
    const auto rhs = [](double, const CardiacState& x) {
        CardiacState d(1);
        d[0] = x[0] * x[0];
        return d;
    };
    try {
        integrate_grid(rhs, scalar_state(1.0), 0.0, 3.0, 0.01);
        FAIL("expected SimulationError");
    } catch (const SimulationError& e) {
        CHECK(e.step_index > 50);
        CHECK(e.step_index < 300);
    }
}

TEST_CASE("cycle simulation produces the documented grid") {
    const PatientParams p = PatientParams::reference();
    const Trajectory traj = simulate_cycles(p);
    CHECK(traj.dim == 5);
    CHECK(traj.size() == 3 * 2000 + 1);
    CHECK(traj.dt == doctest::Approx(0.8 / 2000.0).epsilon(1e-15));
    CHECK(traj.t0 == 0.0);
    CHECK(traj.duration() == doctest::Approx(2.4).epsilon(1e-12));
    CHECK_FALSE(traj.lvad.has_value());

    const Trajectory assisted = simulate_cycles(p, LvadParams::reference(), {2, 1000});
    CHECK(assisted.dim == 6);
    CHECK(assisted.size() == 2 * 1000 + 1);
    CHECK(assisted.lvad.has_value());
}

TEST_CASE("cycle simulation is deterministic") {
    const PatientParams p = PatientParams::reference();
    const Trajectory a = simulate_cycles(p);
    const Trajectory b = simulate_cycles(p);
    REQUIRE(a.data.size() == b.data.size());
    CHECK(a.data == b.data);
}

TEST_CASE("restarting from a stored sample reproduces the tail") {
    const PatientParams p = PatientParams::reference();
    const Trajectory traj = simulate_cycles(p, std::nullopt, {2, 2000});
    const std::size_t k0 = 2000;
    const CardiacState mid = traj.state(k0);
    const auto rhs = [&](double t, const CardiacState& x) { return rhs5(t, x, p); };
    const auto tail = integrate_grid(rhs, mid, traj.time(k0), traj.time(k0) + 10.0 * traj.dt, traj.dt);
    REQUIRE(tail.size() == 11);
    for (std::size_t i = 0; i < tail.size(); ++i) {
        for (std::size_t j = 0; j < 5; ++j) {
            CHECK(tail[i][j] == doctest::Approx(traj.component(k0 + i, j)).epsilon(1e-9));
        }
    }
}

TEST_CASE("trajectory observables derive from the stored state") {
    const PatientParams p = PatientParams::reference();
    const Trajectory traj = simulate_cycles(p, std::nullopt, {1, 200});
    for (std::size_t k = 0; k < traj.size(); k += 37) {
        CHECK(traj.v_lv(k) == doctest::Approx(traj.component(k, 0) + p.v_d).epsilon(1e-15));
        const double e_t = elastance(ElastanceSpec::from(p), traj.time(k));
        CHECK(traj.p_lv(k) == doctest::Approx(traj.component(k, 0) * e_t).epsilon(1e-15));
    }
}

TEST_CASE("cycle simulation validates its settings") {
    const PatientParams p = PatientParams::reference();
    CHECK_THROWS_AS(simulate_cycles(p, std::nullopt, {0, 2000}), ValidationError);
    CHECK_THROWS_AS(simulate_cycles(p, std::nullopt, {3, 1}), ValidationError);
    PatientParams bad = p;
    bad.r_a = -1.0;
    CHECK_THROWS_AS(simulate_cycles(bad), ValidationError);
}

TEST_CASE("assisted run at high speed raises ejection fraction machinery inputs") {
    // Coarse sanity on the coupled 6-state run: the pump pushes volume out of
    // the ventricle, so the minimum stressed volume drops below baseline.
    const PatientParams p = PatientParams::reference();
    LvadParams lvad = LvadParams::reference();
    lvad.omega_schedule = OmegaSchedule::constant(12000.0);
    const Trajectory base = simulate_cycles(p, std::nullopt, {3, 2000});
    const Trajectory assisted = simulate_cycles(p, lvad, {3, 2000});
    double min_base = 1e300, min_assisted = 1e300;
    for (std::size_t k = 2 * 2000; k < base.size(); ++k) min_base = std::min(min_base, base.component(k, 0));
    for (std::size_t k = 2 * 2000; k < assisted.size(); ++k) {
        min_assisted = std::min(min_assisted, assisted.component(k, 0));
    }
    CHECK(min_assisted < min_base);
}
