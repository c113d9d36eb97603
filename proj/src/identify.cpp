#include "cardiotwin/identify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <json.hpp>

#include "cardiotwin/errors.hpp"

namespace cardiotwin {

using nlohmann::json;

namespace {

struct Autocorr {
    bool found = false;
    double lag = 0.0;  // fractional samples
};

/// Mean squared mismatch between a series and itself shifted by a fractional
/// lag, with linear interpolation at the shifted sample points. For a
/// periodic series this has a sharp minimum at the true period.
double shift_mismatch(std::span<const double> e, double lag) {
    const std::size_t n = e.size();
    const auto whole = static_cast<std::size_t>(lag);
    const double frac = lag - static_cast<double>(whole);
    if (whole + 2 > n) return std::numeric_limits<double>::infinity();
    const std::size_t count = n - 1 - whole;
    double acc = 0.0;
    for (std::size_t i = 0; i < count; ++i) {
        const double shifted = e[i + whole] * (1.0 - frac) + e[i + whole + 1] * frac;
        const double d = e[i] - shifted;
        acc += d * d;
    }
    return acc / static_cast<double>(count);
}

/// Dominant period of a mean-centered series, in samples. A strided
/// autocorrelation pass brackets the period cheaply while still spanning the
/// whole series; each lag is normalized by its overlap length so the
/// shrinking overlap does not tilt the peak toward smaller lags. Harmonics
/// repeat the fundamental's peak height, so among near-maximal local peaks
/// the smallest lag wins. A golden-section pass then refines the lag as a
/// continuous minimizer of the self-shift mismatch, which stays unbiased
/// when the series holds a non-integer number of cycles.
Autocorr dominant_period(std::span<const double> centered) {
    const std::size_t n = centered.size();
    if (n < 8) return {};

    const std::size_t stride = std::max<std::size_t>(1, n / 20000);
    std::vector<double> coarse;
    coarse.reserve(n / stride + 1);
    for (std::size_t i = 0; i < n; i += stride) coarse.push_back(centered[i]);
    const std::size_t nc = coarse.size();

    double energy = 0.0;
    for (double v : coarse) energy += v * v;
    if (energy <= 0.0) return {};
    const double mean_power = energy / static_cast<double>(nc);

    const std::size_t lag_max = nc / 2;
    std::vector<double> rho(lag_max + 1, 0.0);
    rho[0] = 1.0;
    for (std::size_t k = 1; k <= lag_max; ++k) {
        double acc = 0.0;
        for (std::size_t i = 0; i + k < nc; ++i) acc += coarse[i] * coarse[i + k];
        rho[k] = acc / (static_cast<double>(nc - k) * mean_power);
    }

    // Skip the zero-lag lobe: search only past the first sign change.
    std::size_t start = 0;
    for (std::size_t k = 1; k <= lag_max; ++k) {
        if (rho[k] < 0.0) {
            start = k;
            break;
        }
    }
    if (start == 0) return {};

    double peak_value = 0.0;
    for (std::size_t k = start; k <= lag_max; ++k) peak_value = std::max(peak_value, rho[k]);
    if (peak_value < 0.2) return {};

    std::size_t best = 0;
    for (std::size_t k = std::max<std::size_t>(start, 2); k + 1 <= lag_max && best == 0; ++k) {
        const bool local_max = rho[k] >= rho[k - 1] && rho[k] >= rho[k + 1];
        if (local_max && rho[k] >= 0.8 * peak_value) best = k;
    }
    if (best == 0) return {};

    double lo = static_cast<double>((best - 2) * stride);
    double hi = static_cast<double>((best + 2) * stride);
    lo = std::max(lo, 1.0);
    hi = std::min(hi, static_cast<double>(n - 2));
    if (!(lo < hi)) return {};

    constexpr double kInvPhi = 0.6180339887498949;
    double a = lo, b = hi;
    double x1 = b - kInvPhi * (b - a);
    double x2 = a + kInvPhi * (b - a);
    double f1 = shift_mismatch(centered, x1);
    double f2 = shift_mismatch(centered, x2);
    while (b - a > 1e-6) {
        if (f1 <= f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - kInvPhi * (b - a);
            f1 = shift_mismatch(centered, x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + kInvPhi * (b - a);
            f2 = shift_mismatch(centered, x2);
        }
    }
    return {true, 0.5 * (a + b)};
}

}  // namespace

ElastanceRecovery recover_elastance(std::span<const double> x1, std::span<const double> p_lv,
                                    std::span<const double> v_lv, double dt) {
    const std::size_t n = x1.size();
    if (n < 8 || p_lv.size() != n || v_lv.size() != n) {
        throw RecoveryError("recover_elastance: need three equally sized series of length >= 8");
    }
    if (!(dt > 0.0)) throw RecoveryError("recover_elastance: dt must be positive");

    // v_d is the pointwise volume offset; it must not drift. The tolerance
    // rides on the volume magnitude so series that went through a
    // 9-significant-digit CSV round trip still count as constant.
    double v_d = 0.0;
    double v_scale = 1.0;
    for (std::size_t k = 0; k < n; ++k) {
        v_d += v_lv[k] - x1[k];
        v_scale = std::max(v_scale, std::abs(v_lv[k]));
    }
    v_d /= static_cast<double>(n);
    const double v_d_tol = 1e-5 * v_scale;
    for (std::size_t k = 0; k < n; ++k) {
        if (std::abs((v_lv[k] - x1[k]) - v_d) > v_d_tol) {
            throw RecoveryError("recover_elastance: v_lv - x1 is not constant; inconsistent channels");
        }
    }

    double x1_peak = 0.0;
    for (double v : x1) x1_peak = std::max(x1_peak, std::abs(v));
    std::vector<double> e(n);
    for (std::size_t k = 0; k < n; ++k) {
        if (std::abs(x1[k]) <= 1e-9 * std::max(1.0, x1_peak)) {
            throw RecoveryError("recover_elastance: ventricular charge touches zero; elastance undefined");
        }
        e[k] = p_lv[k] / (v_lv[k] - v_d);
    }

    ElastanceRecovery rec;
    rec.v_d = v_d;

    double mean = 0.0;
    for (double v : e) mean += v;
    mean /= static_cast<double>(n);
    std::vector<double> centered(n);
    double var = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        centered[k] = e[k] - mean;
        var += centered[k] * centered[k];
    }
    const double stddev = std::sqrt(var / static_cast<double>(n));
    if (stddev <= 1e-9 * std::max(1.0, std::abs(mean))) {
        rec.periodic = false;  // flat elastance: no cycle to measure
        rec.e_max = *std::max_element(e.begin(), e.end());
        rec.e_min = *std::min_element(e.begin(), e.end());
        rec.t_c = 0.0;
        return rec;
    }

    const Autocorr period = dominant_period(centered);
    if (!period.found) {
        rec.periodic = false;
        rec.e_max = *std::max_element(e.begin(), e.end());
        rec.e_min = *std::min_element(e.begin(), e.end());
        rec.t_c = 0.0;
        return rec;
    }
    rec.periodic = true;
    rec.t_c = period.lag * dt;

    // Extrema over the last full cycle.
    const auto spc = static_cast<std::size_t>(std::llround(period.lag));
    const std::size_t begin = n > spc + 1 ? n - spc - 1 : 0;
    rec.e_max = e[begin];
    rec.e_min = e[begin];
    for (std::size_t k = begin; k < n; ++k) {
        rec.e_max = std::max(rec.e_max, e[k]);
        rec.e_min = std::min(rec.e_min, e[k]);
    }
    return rec;
}

ElastanceRecovery recover_elastance(const Trajectory& traj) {
    const std::size_t n = traj.size();
    std::vector<double> x1(n), p(n), v(n);
    for (std::size_t k = 0; k < n; ++k) {
        x1[k] = traj.component(k, 0);
        p[k] = traj.p_lv(k);
        v[k] = traj.v_lv(k);
    }
    return recover_elastance(x1, p, v, traj.dt);
}

double truncated_laplace(std::span<const double> series, double dt, double s) {
    if (series.size() < 2) throw RecoveryError("truncated_laplace: need at least two samples");
    if (!(dt > 0.0)) throw RecoveryError("truncated_laplace: dt must be positive");

    const std::size_t n = series.size();
    double acc = 0.5 * series[0];  // exp(-s*0) == 1
    for (std::size_t k = 1; k + 1 < n; ++k) {
        acc += std::exp(-s * static_cast<double>(k) * dt) * series[k];
    }
    acc += 0.5 * std::exp(-s * static_cast<double>(n - 1) * dt) * series[n - 1];
    return acc * dt;
}

namespace {

struct RowFit {
    double u1 = 0.0;
    double u2 = 0.0;
    double rel_residual = 0.0;
};

/// min || u1*c1 + u2*c2 - b || over the s-grid, via modified Gram-Schmidt QR.
/// The conditioning gate uses the design matrix's singular values.
RowFit solve_row(const std::array<double, 3>& c1, const std::array<double, 3>& c2,
                 const std::array<double, 3>& b, int row_number) {
    double g11 = 0.0, g12 = 0.0, g22 = 0.0;
    for (std::size_t i = 0; i < 3; ++i) {
        g11 += c1[i] * c1[i];
        g12 += c1[i] * c2[i];
        g22 += c2[i] * c2[i];
    }
    const double tr = g11 + g22;
    const double det_part = std::sqrt(std::max((g11 - g22) * (g11 - g22) + 4.0 * g12 * g12, 0.0));
    const double lam_max = 0.5 * (tr + det_part);
    const double lam_min = 0.5 * (tr - det_part);
    if (!(lam_min > 0.0) || std::sqrt(lam_max / lam_min) > 1e10) {
        throw RecoveryError("recover_static_params: row " + std::to_string(row_number) +
                            " is ill-conditioned; parameters not identifiable from this trajectory");
    }

    const double r11 = std::sqrt(g11);
    std::array<double, 3> q1{};
    for (std::size_t i = 0; i < 3; ++i) q1[i] = c1[i] / r11;
    double r12 = 0.0;
    for (std::size_t i = 0; i < 3; ++i) r12 += q1[i] * c2[i];
    std::array<double, 3> v2{};
    double r22sq = 0.0;
    for (std::size_t i = 0; i < 3; ++i) {
        v2[i] = c2[i] - r12 * q1[i];
        r22sq += v2[i] * v2[i];
    }
    const double r22 = std::sqrt(r22sq);

    double q1b = 0.0, q2b = 0.0;
    for (std::size_t i = 0; i < 3; ++i) {
        q1b += q1[i] * b[i];
        q2b += v2[i] / r22 * b[i];
    }
    RowFit fit;
    fit.u2 = q2b / r22;
    fit.u1 = (q1b - r12 * fit.u2) / r11;

    double res = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < 3; ++i) {
        const double r = fit.u1 * c1[i] + fit.u2 * c2[i] - b[i];
        res += r * r;
        const double terms = std::abs(fit.u1 * c1[i]) + std::abs(fit.u2 * c2[i]);
        scale += terms * terms;
    }
    fit.rel_residual = std::sqrt(res) / std::max(std::sqrt(scale), 1e-300);
    return fit;
}

double require_positive_recovered(double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) {
        throw RecoveryError(std::string("recover_static_params: recovered ") + name + " is not positive");
    }
    return v;
}

}  // namespace

StaticRecovery recover_static_params(const Trajectory& traj, std::span<const double> elastance_series,
                                     const std::array<double, 3>& s_values) {
    return recover_static_params(traj.data, traj.dim, traj.dt, elastance_series, s_values);
}

StaticRecovery recover_static_params(std::span<const double> states, std::size_t dim, double dt,
                                     std::span<const double> elastance_series,
                                     const std::array<double, 3>& s_values) {
    // The balance rows below describe the unassisted circuit; a pump run
    // reroutes charge through x6 and would bias rows 1 and 4.
    if (dim != 5) throw RecoveryError("recover_static_params: need exactly the five circulation states");
    if (states.size() % dim != 0) throw RecoveryError("recover_static_params: ragged state data");
    const std::size_t n = states.size() / dim;
    if (n < 16) throw RecoveryError("recover_static_params: trajectory too short");
    if (!(dt > 0.0)) throw RecoveryError("recover_static_params: dt must be positive");
    if (elastance_series.size() != n) {
        throw RecoveryError("recover_static_params: elastance series length mismatch");
    }

    std::array<std::vector<double>, 5> x;
    for (auto& v : x) v.resize(n);
    std::vector<double> q1(n), q2(n);
    for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t j = 0; j < 5; ++j) x[j][k] = states[k * dim + j];
        const double p_lv = x[0][k] * elastance_series[k];
        q1[k] = std::max(x[1][k] - p_lv, 0.0);
        q2[k] = std::max(p_lv - x[3][k], 0.0);
    }
    std::array<std::array<double, 3>, 5> lx{};  // lx[j][i]: L(x_j) at s_values[i]
    std::array<double, 3> lq1{}, lq2{};
    std::array<std::array<double, 3>, 5> lhs{};
    for (std::size_t i = 0; i < 3; ++i) {
        const double s = s_values[i];
        for (std::size_t j = 0; j < 5; ++j) {
            lx[j][i] = truncated_laplace(x[j], dt, s);
            lhs[j][i] = s * lx[j][i] - x[j][0];
        }
        lq1[i] = truncated_laplace(q1, dt, s);
        lq2[i] = truncated_laplace(q2, dt, s);
    }

    const auto diff = [](const std::array<double, 3>& a, const std::array<double, 3>& b) {
        return std::array<double, 3>{a[0] - b[0], a[1] - b[1], a[2] - b[2]};
    };
    const auto neg = [](const std::array<double, 3>& a) {
        return std::array<double, 3>{-a[0], -a[1], -a[2]};
    };

    StaticRecovery rec;

    // Ventricular charge row: coefficients (1/r_m, 1/r_a) on the valve flows.
    const RowFit row1 = solve_row(lq1, neg(lq2), lhs[0], 1);
    rec.r_m = require_positive_recovered(1.0 / row1.u1, "r_m");
    rec.r_a = require_positive_recovered(1.0 / row1.u2, "r_a");
    rec.row_rel_residual[0] = row1.rel_residual;

    // Atrial pressure row, filling flow rescaled by the recovered r_m:
    // coefficients (1/(r_s c_r), 1/c_r).
    std::array<double, 3> lq1_scaled{};
    for (std::size_t i = 0; i < 3; ++i) lq1_scaled[i] = lq1[i] / rec.r_m;
    const RowFit row2 = solve_row(diff(lx[2], lx[1]), neg(lq1_scaled), lhs[1], 2);
    rec.c_r = require_positive_recovered(1.0 / row2.u2, "c_r");
    rec.r_s = require_positive_recovered(row2.u2 / row2.u1, "r_s");
    rec.row_rel_residual[1] = row2.rel_residual;

    // Systemic pressure row: coefficients (1/(r_s c_s), 1/c_s); yields c_s
    // and an independent r_s estimate.
    const RowFit row3 = solve_row(diff(lx[1], lx[2]), lx[4], lhs[2], 3);
    rec.c_s = require_positive_recovered(1.0 / row3.u2, "c_s");
    rec.r_s_systemic = require_positive_recovered(row3.u2 / row3.u1, "r_s (systemic row)");
    rec.row_rel_residual[2] = row3.rel_residual;

    // Aortic pressure row: coefficients (1/c_a, 1/(r_a c_a)).
    const RowFit row4 = solve_row(neg(lx[4]), lq2, lhs[3], 4);
    rec.c_a = require_positive_recovered(1.0 / row4.u1, "c_a");
    rec.row_rel_residual[3] = row4.rel_residual;

    // Aortic flow row: coefficients (1/l_s, r_c/l_s).
    const RowFit row5 = solve_row(diff(lx[3], lx[2]), neg(lx[4]), lhs[4], 5);
    rec.l_s = require_positive_recovered(1.0 / row5.u1, "l_s");
    rec.r_c = require_positive_recovered(row5.u2 / row5.u1, "r_c");
    rec.row_rel_residual[4] = row5.rel_residual;

    return rec;
}

RecoveredParams recover_all(const Trajectory& traj, const PatientParams* truth) {
    const std::size_t n = traj.size();
    std::vector<double> p(n), v(n);
    for (std::size_t k = 0; k < n; ++k) {
        p[k] = traj.p_lv(k);
        v[k] = traj.v_lv(k);
    }
    return recover_all(traj.data, traj.dim, traj.dt, p, v, truth);
}

RecoveredParams recover_all(std::span<const double> states, std::size_t dim, double dt,
                            std::span<const double> p_lv, std::span<const double> v_lv,
                            const PatientParams* truth) {
    if (dim == 0 || states.size() % dim != 0) throw RecoveryError("recover_all: ragged state data");
    const std::size_t n = states.size() / dim;
    if (p_lv.size() != n || v_lv.size() != n) {
        throw RecoveryError("recover_all: pressure/volume series length mismatch");
    }

    std::vector<double> x1(n);
    for (std::size_t k = 0; k < n; ++k) x1[k] = states[k * dim];

    RecoveredParams out;
    out.elastance = recover_elastance(x1, p_lv, v_lv, dt);

    std::vector<double> e(n);
    for (std::size_t k = 0; k < n; ++k) {
        e[k] = p_lv[k] / (v_lv[k] - out.elastance.v_d);
    }
    out.statics = recover_static_params(states, dim, dt, e);

    if (truth != nullptr) {
        const auto rel = [](double got, double want) {
            return std::abs(got - want) / std::max(std::abs(want), 1e-300);
        };
        std::map<std::string, double> errs;
        errs["v_d"] = rel(out.elastance.v_d, truth->v_d);
        errs["e_max"] = rel(out.elastance.e_max, truth->e_max);
        errs["e_min"] = rel(out.elastance.e_min, truth->e_min);
        errs["t_c"] = rel(out.elastance.t_c, truth->t_c);
        errs["r_m"] = rel(out.statics.r_m, truth->r_m);
        errs["r_a"] = rel(out.statics.r_a, truth->r_a);
        errs["r_s"] = rel(out.statics.r_s, truth->r_s);
        errs["c_r"] = rel(out.statics.c_r, truth->c_r);
        errs["c_s"] = rel(out.statics.c_s, truth->c_s);
        errs["c_a"] = rel(out.statics.c_a, truth->c_a);
        errs["l_s"] = rel(out.statics.l_s, truth->l_s);
        errs["r_c"] = rel(out.statics.r_c, truth->r_c);
        out.rel_errors = std::move(errs);
    }
    return out;
}

std::string recovered_to_json(const RecoveredParams& r, int indent) {
    json j;
    j["elastance"] = {
        {"v_d", r.elastance.v_d}, {"e_max", r.elastance.e_max}, {"e_min", r.elastance.e_min},
        {"t_c", r.elastance.t_c}, {"periodic", r.elastance.periodic},
    };
    j["statics"] = {
        {"r_m", r.statics.r_m},
        {"r_a", r.statics.r_a},
        {"r_s", r.statics.r_s},
        {"r_s_systemic", r.statics.r_s_systemic},
        {"c_r", r.statics.c_r},
        {"c_s", r.statics.c_s},
        {"c_a", r.statics.c_a},
        {"l_s", r.statics.l_s},
        {"r_c", r.statics.r_c},
    };
    j["row_rel_residual"] = r.statics.row_rel_residual;
    if (r.rel_errors) j["rel_errors"] = *r.rel_errors;
    return j.dump(indent);
}

}  // namespace cardiotwin
