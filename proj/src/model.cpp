#include "cardiotwin/model.hpp"

#include <cassert>

namespace cardiotwin {

CardiacState rhs5(double t, const CardiacState& x, const PatientParams& p) {
    assert(x.dim() == 5);
    const double e_t = elastance(ElastanceSpec::from(p), t);
    const auto [q_m, q_a] = valve_flows(x, e_t, p);

    CardiacState dx(5);
    dx[0] = q_m - q_a;
    dx[1] = (x.x3() - x.x2()) / (p.r_s * p.c_r) - q_m / p.c_r;
    dx[2] = (x.x2() - x.x3()) / (p.r_s * p.c_s) + x.x5() / p.c_s;
    dx[3] = -x.x5() / p.c_a + q_a / p.c_a;
    dx[4] = (x.x4() - x.x3()) / p.l_s - p.r_c * x.x5() / p.l_s;
    return dx;
}

CardiacState rhs6(double t, const CardiacState& x, const PatientParams& p, const LvadParams& lvad) {
    assert(x.dim() == 6);
    const double e_t = elastance(ElastanceSpec::from(p), t);
    const auto [q_m, q_a] = valve_flows(x, e_t, p);
    const double p_lv = x.x1() * e_t;
    const double r_k = suction_resistance(p_lv, lvad);
    const double omega = lvad.omega_schedule.at(t);
    const double denom = lvad.flow_denominator();

    // The pump shunts ventricle -> aorta, so its flow drains x1 and feeds x4
    // on top of the valve dynamics. The flow state itself follows the pressure
    // head across the pump minus the speed-dependent drive.
    CardiacState dy(6);
    dy[0] = q_m - q_a - x.x6();
    dy[1] = (x.x3() - x.x2()) / (p.r_s * p.c_r) - q_m / p.c_r;
    dy[2] = (x.x2() - x.x3()) / (p.r_s * p.c_s) + x.x5() / p.c_s;
    dy[3] = -x.x5() / p.c_a + q_a / p.c_a + x.x6() / p.c_a;
    dy[4] = (x.x4() - x.x3()) / p.l_s - p.r_c * x.x5() / p.l_s;
    dy[5] = (-p_lv + x.x4() + (lvad.r_i + lvad.r_o + r_k - lvad.beta0) * x.x6()
             - lvad.beta2 * omega * omega)
            / denom;
    return dy;
}

CardiacState initial_state(const PatientParams& p, bool with_pump) {
    CardiacState s(with_pump ? 6 : 5);
    s[0] = p.start_v;
    s[1] = p.start_v * p.e_min;
    s[2] = p.start_pao;
    s[3] = p.start_pao;
    s[4] = 0.0;
    // x6 (pump flow) starts at rest when present; CardiacState zero-fills.
    return s;
}

}  // namespace cardiotwin
