#pragma once

#include <array>
#include <cstddef>

#include "cardiotwin/elastance.hpp"
#include "cardiotwin/params.hpp"

namespace cardiotwin {

/// Circuit state. Components:
///   [0] x1: ventricular charge V_LV - v_d        (ml)
///   [1] x2: left atrial pressure                 (mmHg)
///   [2] x3: systemic/arterial pressure           (mmHg)
///   [3] x4: aortic pressure                      (mmHg)
///   [4] x5: total aortic flow                    (ml/s)
///   [5] x6: pump flow, present only with an LVAD (ml/s)
class CardiacState {
public:
    CardiacState() = default;
    explicit CardiacState(std::size_t dim) : dim_(dim) {}

    static CardiacState baseline(const std::array<double, 5>& v) {
        CardiacState s(5);
        for (std::size_t i = 0; i < 5; ++i) s.v_[i] = v[i];
        return s;
    }

    static CardiacState with_pump(const std::array<double, 6>& v) {
        CardiacState s(6);
        for (std::size_t i = 0; i < 6; ++i) s.v_[i] = v[i];
        return s;
    }

    std::size_t dim() const { return dim_; }
    bool has_pump_flow() const { return dim_ == 6; }

    double operator[](std::size_t i) const { return v_[i]; }
    double& operator[](std::size_t i) { return v_[i]; }

    double x1() const { return v_[0]; }
    double x2() const { return v_[1]; }
    double x3() const { return v_[2]; }
    double x4() const { return v_[3]; }
    double x5() const { return v_[4]; }
    double x6() const { return v_[5]; }

private:
    std::array<double, 6> v_{};
    std::size_t dim_ = 5;
};

/// Valve flows. Ideal diodes in series with a resistance: flow is zero
/// against the pressure gradient, linear with it otherwise.
struct ValveFlows {
    double mitral = 0.0;  // into the ventricle
    double aortic = 0.0;  // out of the ventricle
};

inline ValveFlows valve_flows(const CardiacState& x, double e_t, const PatientParams& p) {
    const double p_lv = x.x1() * e_t;
    return {
        std::max(x.x2() - p_lv, 0.0) / p.r_m,
        std::max(p_lv - x.x4(), 0.0) / p.r_a,
    };
}

/// Suction-guard resistance: rises linearly as ventricular pressure falls
/// below p_bar (alpha < 0), zero above it. Throttles the pump rather than
/// letting it pull the ventricle negative.
inline double suction_resistance(double p_lv, const LvadParams& lvad) {
    return std::max(lvad.alpha * (p_lv - lvad.p_bar), 0.0);
}

/// Baseline circulation derivative (5 states, no pump).
CardiacState rhs5(double t, const CardiacState& x, const PatientParams& p);

/// Circulation with an LVAD bridging ventricle and aorta (6 states).
CardiacState rhs6(double t, const CardiacState& x, const PatientParams& p, const LvadParams& lvad);

/// End-diastolic initial condition: ventricle holds start_v above v_d, atrial
/// pressure matches the relaxed ventricle, aorta and arteries equilibrated at
/// start_pao, no aortic (or pump) flow yet.
CardiacState initial_state(const PatientParams& p, bool with_pump = false);

/// Observable pair derived from the state.
struct PressureVolume {
    double p_lv = 0.0;  // ventricular pressure, e_t * x1
    double v_lv = 0.0;  // ventricular volume, x1 + v_d
};

inline PressureVolume pressure_volume(const CardiacState& x, double e_t, const PatientParams& p) {
    return {x.x1() * e_t, x.x1() + p.v_d};
}

}  // namespace cardiotwin
