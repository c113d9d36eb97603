#pragma once

#include <cmath>

#include "cardiotwin/params.hpp"

namespace cardiotwin {

/// Time-varying ventricular elastance description. t_max is the systolic
/// time-scale; it is a function of t_c and is recomputed on access so the two
/// can never drift apart.
struct ElastanceSpec {
    double e_max = 2.0;
    double e_min = 0.05;
    double t_c = 0.8;

    double t_max() const { return 0.2 + 0.15 * t_c; }

    static ElastanceSpec from(const PatientParams& p) { return {p.e_max, p.e_min, p.t_c}; }
};

/// E(t) via the normalized double-hill activation shape. Periodic with
/// period t_c; the shape factor peaks at ~0.996 so E stays strictly inside
/// [e_min, e_max], and E(0) == e_min exactly.
inline double elastance(const ElastanceSpec& spec, double t) {
    double tr = std::fmod(t, spec.t_c);
    if (tr < 0.0) tr += spec.t_c;
    const double tn = tr / spec.t_max();
    const double rise = std::pow(tn / 0.7, 1.9);
    const double decay = std::pow(tn / 1.17, 21.9);
    const double shape = 1.55 * (rise / (1.0 + rise)) / (1.0 + decay);
    return (spec.e_max - spec.e_min) * shape + spec.e_min;
}

}  // namespace cardiotwin
