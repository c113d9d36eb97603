#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "cardiotwin/errors.hpp"
#include "cardiotwin/model.hpp"
#include "cardiotwin/params.hpp"
#include "cardiotwin/rng.hpp"

using namespace cardiotwin;

namespace {

CardiacState random_state(Rng& rng, std::size_t dim) {
    CardiacState x(dim);
    x[0] = rng.uniform(20.0, 250.0);
    x[1] = rng.uniform(2.0, 25.0);
    x[2] = rng.uniform(40.0, 110.0);
    x[3] = rng.uniform(40.0, 130.0);
    x[4] = rng.uniform(-200.0, 400.0);
    if (dim == 6) x[5] = rng.uniform(-50.0, 200.0);
    return x;
}

}  // namespace

TEST_CASE("baseline derivative matches the frozen atrial-pressure value at rest") {
    const PatientParams p = PatientParams::reference();
    const CardiacState x0 = initial_state(p);
    const CardiacState dx = rhs5(0.0, x0, p);
    // At t = 0 both valves are shut and the atrium charges through r_s:
    // (75 - 7) / 4.4, frozen independently.
    CHECK(dx[1] == doctest::Approx(15.454545454545453).epsilon(1e-14));
    CHECK(dx[0] == 0.0);              // no valve flow
    CHECK(dx[4] == doctest::Approx(0.0));  // no aortic pressure gradient yet
}

TEST_CASE("pump-flow derivative matches the frozen value at rest with the pump off") {
    const PatientParams p = PatientParams::reference();
    const LvadParams lvad = LvadParams::reference();
    const CardiacState x0 = initial_state(p, true);
    REQUIRE(x0.dim() == 6);
    const CardiacState dx = rhs6(0.0, x0, p, lvad);
    // (p_lv - p_ao) across the quiescent pump branch: 68 / -0.0524.
    CHECK(dx[5] == doctest::Approx(-1297.709923664122).epsilon(1e-12));
}

TEST_CASE("pump flow denominator matches its closed form") {
    CHECK(LvadParams::reference().flow_denominator() == doctest::Approx(-0.0524).epsilon(1e-12));
}

TEST_CASE("valve flows are one-way") {
    const PatientParams p = PatientParams::reference();
    SUBCASE("both shut between the atrial and aortic pressures") {
        CardiacState x = CardiacState::baseline({100.0, 4.0, 80.0, 90.0, 0.0});
        // p_lv = 100 * 0.05 = 5: above the atrium, below the aorta.
        const ValveFlows q = valve_flows(x, 0.05, p);
        CHECK(q.mitral == 0.0);
        CHECK(q.aortic == 0.0);
        CHECK(rhs5(0.0, x, p)[0] == 0.0);
    }
    SUBCASE("mitral opens on a filling gradient") {
        CardiacState x = CardiacState::baseline({100.0, 9.0, 80.0, 90.0, 0.0});
        const ValveFlows q = valve_flows(x, 0.05, p);
        CHECK(q.mitral == doctest::Approx((9.0 - 5.0) / p.r_m));
        CHECK(q.aortic == 0.0);
    }
    SUBCASE("aortic opens on an ejecting gradient") {
        CardiacState x = CardiacState::baseline({100.0, 4.0, 80.0, 90.0, 0.0});
        const ValveFlows q = valve_flows(x, 1.0, p);  // p_lv = 100
        CHECK(q.mitral == 0.0);
        CHECK(q.aortic == doctest::Approx((100.0 - 90.0) / p.r_a));
    }
}

TEST_CASE("suction guard engages only below the pressure threshold") {
    const LvadParams lvad = LvadParams::reference();
    CHECK(suction_resistance(0.5, lvad) == doctest::Approx(1.75));
    CHECK(suction_resistance(1.0, lvad) == 0.0);
    CHECK(suction_resistance(20.0, lvad) == 0.0);
}

TEST_CASE("stressed volume and pressures conserve total charge") {
    // x1 + c_r x2 + c_s x3 + c_a x4 is redistributed, never created: its
    // derivative must vanish for any state, with and without the pump.
    const PatientParams p = PatientParams::reference();
    const LvadParams lvad = LvadParams::reference();
    Rng rng(1010);
    for (int i = 0; i < 200; ++i) {
        const double t = rng.uniform(0.0, 0.8);
        const CardiacState x5s = random_state(rng, 5);
        const CardiacState d5 = rhs5(t, x5s, p);
        const double q5 = d5[0] + p.c_r * d5[1] + p.c_s * d5[2] + p.c_a * d5[3];
        const double scale5 =
            std::abs(d5[0]) + p.c_r * std::abs(d5[1]) + p.c_s * std::abs(d5[2]) + p.c_a * std::abs(d5[3]);
        CHECK(std::abs(q5) <= 1e-10 * std::max(1.0, scale5));

        const CardiacState x6s = random_state(rng, 6);
        const CardiacState d6 = rhs6(t, x6s, p, lvad);
        const double q6 = d6[0] + p.c_r * d6[1] + p.c_s * d6[2] + p.c_a * d6[3];
        const double scale6 =
            std::abs(d6[0]) + p.c_r * std::abs(d6[1]) + p.c_s * std::abs(d6[2]) + p.c_a * std::abs(d6[3]);
        CHECK(std::abs(q6) <= 1e-10 * std::max(1.0, scale6));
    }
}

TEST_CASE("pump branch at zero flow leaves the circulation derivative unchanged") {
    const PatientParams p = PatientParams::reference();
    const LvadParams lvad = LvadParams::reference();
    Rng rng(77);
    for (int i = 0; i < 50; ++i) {
        const double t = rng.uniform(0.0, 0.8);
        CardiacState x6s = random_state(rng, 6);
        x6s[5] = 0.0;
        CardiacState x5s(5);
        for (std::size_t j = 0; j < 5; ++j) x5s[j] = x6s[j];
        const CardiacState d5 = rhs5(t, x5s, p);
        const CardiacState d6 = rhs6(t, x6s, p, lvad);
        for (std::size_t j = 0; j < 5; ++j) CHECK(d6[j] == doctest::Approx(d5[j]).epsilon(1e-14));
    }
}

TEST_CASE("initial state is the relaxed end-diastolic configuration") {
    PatientParams p = PatientParams::reference();
    const CardiacState x = initial_state(p);
    CHECK(x.dim() == 5);
    CHECK(x[0] == p.start_v);
    CHECK(x[1] == p.start_v * p.e_min);
    CHECK(x[2] == p.start_pao);
    CHECK(x[3] == p.start_pao);
    CHECK(x[4] == 0.0);

    const CardiacState xp = initial_state(p, true);
    CHECK(xp.dim() == 6);
    CHECK(xp[5] == 0.0);
}

TEST_CASE("pressure and volume observables derive from the stressed volume") {
    PatientParams p = PatientParams::reference();
    CardiacState x = CardiacState::baseline({120.0, 5.0, 80.0, 85.0, 0.0});
    const PressureVolume pv = pressure_volume(x, 1.5, p);
    CHECK(pv.p_lv == doctest::Approx(180.0));
    CHECK(pv.v_lv == doctest::Approx(130.0));
}

TEST_CASE("patient parameter validation rejects non-physical values") {
    PatientParams p = PatientParams::reference();
    CHECK_NOTHROW(p.validate());

    SUBCASE("zero filling volume is legal") {
        p.start_v = 0.0;
        CHECK_NOTHROW(p.validate());
    }
    SUBCASE("negative filling volume is not") {
        p.start_v = -1.0;
        CHECK_THROWS_AS(p.validate(), ValidationError);
    }
    SUBCASE("resistances must be positive") {
        p.r_m = 0.0;
        CHECK_THROWS_AS(p.validate(), ValidationError);
    }
    SUBCASE("elastance band must be ordered") {
        p.e_max = p.e_min;
        CHECK_THROWS_AS(p.validate(), ValidationError);
    }
    SUBCASE("cycle length must be positive") {
        p.t_c = 0.0;
        CHECK_THROWS_AS(p.validate(), ValidationError);
    }
}

TEST_CASE("pump speed schedules evaluate as documented") {
    SUBCASE("constant") {
        const OmegaSchedule s = OmegaSchedule::constant(9000.0);
        CHECK(s.is_constant());
        CHECK(s.at(0.0) == 9000.0);
        CHECK(s.at(123.0) == 9000.0);
    }
    SUBCASE("ramp interpolates and then holds") {
        const OmegaSchedule s = OmegaSchedule::ramp(0.0, 10000.0, 2.0);
        CHECK_FALSE(s.is_constant());
        CHECK(s.at(-1.0) == 0.0);
        CHECK(s.at(1.0) == doctest::Approx(5000.0));
        CHECK(s.at(2.0) == 10000.0);
        CHECK(s.at(50.0) == 10000.0);
    }
    SUBCASE("negative ramp duration is rejected") {
        OmegaSchedule s = OmegaSchedule::ramp(0.0, 10000.0, -1.0);
        CHECK_THROWS_AS(s.validate(), ValidationError);
    }
}

TEST_CASE("pump parameter validation rejects a vanishing flow denominator") {
    LvadParams lvad = LvadParams::reference();
    CHECK_NOTHROW(lvad.validate());
    lvad.beta1 = lvad.l_i + lvad.l_o;
    CHECK_THROWS_AS(lvad.validate(), ValidationError);
}

TEST_CASE("parameter JSON round trips preserve every field") {
    PatientParams p = PatientParams::reference();
    p.r_m = 0.0123;
    p.start_v = 0.0;
    p.t_c = 1.05;
    const PatientParams q = patient_params_from_json(to_json_string(p));
    CHECK(q.r_m == p.r_m);
    CHECK(q.r_a == p.r_a);
    CHECK(q.e_max == p.e_max);
    CHECK(q.e_min == p.e_min);
    CHECK(q.v_d == p.v_d);
    CHECK(q.start_v == p.start_v);
    CHECK(q.t_c == p.t_c);
    CHECK(q.r_c == p.r_c);
    CHECK(q.r_s == p.r_s);
    CHECK(q.c_a == p.c_a);
    CHECK(q.c_s == p.c_s);
    CHECK(q.c_r == p.c_r);
    CHECK(q.l_s == p.l_s);
    CHECK(q.start_pao == p.start_pao);

    LvadParams lvad = LvadParams::reference();
    lvad.omega_schedule = OmegaSchedule::ramp(100.0, 12345.6789, 2.5);
    const LvadParams lv2 = lvad_params_from_json(to_json_string(lvad));
    CHECK(lv2.beta2 == lvad.beta2);
    CHECK(lv2.omega_schedule.start == lvad.omega_schedule.start);
    CHECK(lv2.omega_schedule.end == lvad.omega_schedule.end);
    CHECK(lv2.omega_schedule.ramp_duration == lvad.omega_schedule.ramp_duration);
}

TEST_CASE("parameter JSON rejects unknown keys") {
    std::string text = to_json_string(PatientParams::reference());
    text.insert(text.rfind('}'), ",\n  \"bogus\": 1.0\n");
    CHECK_THROWS_AS(patient_params_from_json(text), ValidationError);
}
