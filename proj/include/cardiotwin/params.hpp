#pragma once

#include <optional>
#include <string>

namespace cardiotwin {

/// Circulation parameters. Resistances in mmHg*s/ml, compliances in ml/mmHg,
/// inertance in mmHg*s^2/ml, elastances in mmHg/ml, volumes in ml, times in s.
struct PatientParams {
    // Learnable per patient.
    double r_m = 0.005;     // mitral valve resistance
    double r_a = 0.001;     // aortic valve resistance
    double e_max = 2.0;     // peak ventricular elastance
    double e_min = 0.05;    // baseline ventricular elastance
    double v_d = 10.0;      // unstressed ventricular volume
    double start_v = 140.0; // initial ventricular filling volume (V_LV - v_d at t=0)
    double t_c = 0.8;       // cardiac cycle length

    // Fixed circulation constants (overridable for sensitivity studies).
    double r_c = 0.0398;    // characteristic aortic resistance
    double r_s = 1.0;       // systemic vascular resistance
    double c_a = 0.08;      // aortic compliance
    double c_s = 1.33;      // systemic compliance
    double c_r = 4.4;       // left atrial compliance
    double l_s = 0.0005;    // aortic flow inertance
    double start_pao = 75.0;// initial aortic and arterial pressure

    static PatientParams reference() { return PatientParams{}; }

    /// Throws ValidationError on non-physical values. start_v may be zero
    /// (an empty ventricle is a legal initial condition); everything else
    /// must be strictly positive and e_max must exceed e_min.
    void validate() const;
};

/// Pump speed profile: constant level, or a linear ramp from `start` to `end`
/// over `ramp_duration` seconds, holding `end` afterwards.
struct OmegaSchedule {
    double start = 0.0;
    double end = 0.0;
    double ramp_duration = 0.0;

    static OmegaSchedule constant(double level) { return {level, level, 0.0}; }
    static OmegaSchedule ramp(double from, double to, double duration) { return {from, to, duration}; }

    bool is_constant() const { return ramp_duration == 0.0 || start == end; }

    double at(double t) const {
        if (is_constant()) return end;
        if (t <= 0.0) return start;
        if (t >= ramp_duration) return end;
        return start + (end - start) * (t / ramp_duration);
    }

    void validate() const;
};

/// Axial-pump model constants. beta0/beta1/beta2 map pump state and speed to
/// the pressure head; alpha and p_bar shape the suction-guard resistance.
struct LvadParams {
    double r_o = 0.0677;    // outlet cannula resistance
    double r_i = 0.0677;    // inlet cannula resistance
    double alpha = -3.5;    // suction-guard slope (negative: engages at low LV pressure)
    double p_bar = 1.0;     // suction-guard pressure threshold
    double l_i = 0.0127;    // inlet inertance
    double l_o = 0.0127;    // outlet inertance
    double beta0 = -0.296;
    double beta1 = -0.027;
    double beta2 = 9.9025e-7;
    OmegaSchedule omega_schedule;

    static LvadParams reference() { return LvadParams{}; }

    /// Coefficient dividing the pump-flow derivative. Must stay away from
    /// zero or the flow state is not integrable.
    double flow_denominator() const { return -l_i - l_o + beta1; }

    void validate() const;
};

// JSON round trips. Field names match the struct members exactly; unknown
// keys are rejected so typos in config files fail loudly.
std::string to_json_string(const PatientParams& p, int indent = 2);
std::string to_json_string(const LvadParams& p, int indent = 2);
PatientParams patient_params_from_json(const std::string& text);
LvadParams lvad_params_from_json(const std::string& text);
PatientParams load_patient_params(const std::string& path);
LvadParams load_lvad_params(const std::string& path);

}  // namespace cardiotwin
