#include "cardiotwin/acceptance.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <map>
#include <optional>
#include <sstream>

#include <json.hpp>

#include "cardiotwin/analysis.hpp"
#include "cardiotwin/errors.hpp"
#include "cardiotwin/identify.hpp"
#include "cardiotwin/mlp.hpp"
#include "cardiotwin/model.hpp"
#include "cardiotwin/pipeline.hpp"
#include "cardiotwin/rng.hpp"
#include "cardiotwin/solver.hpp"
#include "cardiotwin/synth.hpp"
#include "cardiotwin/traj_io.hpp"

namespace cardiotwin {

namespace {

// Pinned run identity: changing any of these changes every number below, so
// they stay fixed.
constexpr std::uint64_t kPretextSeed = 101;
constexpr std::uint64_t kFinetuneSeed = 303;
constexpr std::uint64_t kRenderSeed = 404;
constexpr std::uint64_t kCohortSeed = 505;

// Gates.
constexpr double kPretextEfGatePp = 3.5;
constexpr double kGradRelErrGate = 1e-4;
constexpr double kRichardsonLo = 12.0;
constexpr double kRichardsonHi = 20.0;
constexpr double kLimitCycleFrac = 0.01;
constexpr double kElastanceRelGate = 0.01;
constexpr double kStaticsRelGate = 0.02;
constexpr double kLaplaceResidualGate = 1e-3;
constexpr double kEndToEndEfGatePp = 7.0;
constexpr double kEndToEndVolGateMl = 15.0;

std::string fmt(const char* spec, double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), spec, v);
    return buf;
}

/// Work shared between criteria so the expensive training runs happen once.
struct SuiteState {
    ParamBounds bounds = ParamBounds::defaults();
    std::optional<PretrainResult> pretrain;
    std::optional<FinetuneResult> finetune;
    std::string surrogate_json_before;
    std::string surrogate_json_after;
};

// ---------------------------------------------------------------- gate 1

CriterionResult check_pretext_fidelity(SuiteState& state) {
    CriterionResult r{1, "surrogate-pretext-fidelity", false, ""};
    const PretextDataset data = generate_pretext_dataset(3840, state.bounds, kPretextSeed);
    state.pretrain = pretrain_surrogate(data);  // default: 64x64 tanh, 400 epochs, 1000 eval draws

    const double mae = state.pretrain->eval_ef_mae_pp;
    r.passed = mae <= kPretextEfGatePp;
    r.detail = "EF MAE " + fmt("%.3f", mae) + " pp on " + std::to_string(state.pretrain->eval_count) +
               " held-out draws (gate " + fmt("%.1f", kPretextEfGatePp) + "); dataset failures " +
               std::to_string(data.failed) + "/" + std::to_string(data.attempted);
    return r;
}

// ---------------------------------------------------------------- gate 2

double loss_only(const Mlp& net, const TrainData& batch, const Mlp* tail) {
    double acc = 0.0;
    std::size_t out_dim = 0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        std::vector<double> out = forward(net, batch.input(i));
        if (tail != nullptr) out = forward(*tail, out);
        out_dim = out.size();
        const auto target = batch.target(i);
        for (std::size_t j = 0; j < out.size(); ++j) {
            const double err = out[j] - target[j];
            acc += err * err;
        }
    }
    return acc / (static_cast<double>(batch.size()) * static_cast<double>(out_dim));
}

CriterionResult check_gradients(SuiteState&) {
    CriterionResult r{2, "gradient-correctness", false, ""};

    struct Combo {
        Activation act;
        HeadKind head;
        bool tail;
    };
    const Combo combos[] = {
        {Activation::tanh_fn, HeadKind::linear, false},
        {Activation::tanh_fn, HeadKind::linear, true},
        {Activation::tanh_fn, HeadKind::range_sigmoid, false},
        {Activation::tanh_fn, HeadKind::range_sigmoid, true},
        {Activation::relu, HeadKind::linear, false},
        {Activation::relu, HeadKind::linear, true},
        {Activation::relu, HeadKind::range_sigmoid, false},
        {Activation::relu, HeadKind::range_sigmoid, true},
    };

    constexpr double kStep = 1e-5;
    double worst = 0.0;
    int nets_checked = 0;

    for (int i = 0; i < 50; ++i) {
        const Combo combo = combos[i % 8];
        const std::uint64_t seed = 9000 + static_cast<std::uint64_t>(i);

        const std::size_t in_dim = 3 + static_cast<std::size_t>(i % 3);
        const std::size_t out_dim = 2 + static_cast<std::size_t>(i % 2);
        std::vector<std::size_t> dims = {in_dim, 6, 5, out_dim};

        std::vector<double> lo(out_dim), hi(out_dim);
        for (std::size_t j = 0; j < out_dim; ++j) {
            lo[j] = -1.2 - 0.15 * static_cast<double>(j);
            hi[j] = 0.8 + 0.25 * static_cast<double>(j);
        }
        Mlp net = combo.head == HeadKind::range_sigmoid
                      ? make_mlp(dims, combo.act, combo.head, seed, lo, hi)
                      : make_mlp(dims, combo.act, combo.head, seed);

        std::optional<Mlp> tail;
        if (combo.tail) {
            tail = make_mlp({out_dim, 4, 2}, i % 2 == 0 ? Activation::tanh_fn : Activation::relu,
                            HeadKind::linear, seed + 17);
        }
        const Mlp* tail_ptr = tail ? &*tail : nullptr;
        const std::size_t final_dim = tail ? tail->output_dim() : out_dim;

        Rng rng(seed + 33);
        TrainData batch;
        batch.input_dim = in_dim;
        batch.target_dim = final_dim;
        for (int b = 0; b < 4; ++b) {
            std::vector<double> x(in_dim), y(final_dim);
            for (auto& v : x) v = rng.uniform(-1.0, 1.0);
            for (auto& v : y) v = rng.uniform(-1.0, 1.0);
            batch.add(x, y);
        }

        const LossGrad lg = loss_and_grad(net, batch, tail_ptr);
        ++nets_checked;

        for (std::size_t layer = 0; layer < net.layer_count(); ++layer) {
            const auto probe = [&](std::vector<double> Mlp::*unused, bool is_weight, std::size_t idx) {
                (void)unused;
                Mlp bumped = net;
                auto& slot = is_weight ? bumped.weights[layer][idx] : bumped.biases[layer][idx];
                const double saved = slot;
                slot = saved + kStep;
                const double up = loss_only(bumped, batch, tail_ptr);
                slot = saved - kStep;
                const double down = loss_only(bumped, batch, tail_ptr);
                const double fd = (up - down) / (2.0 * kStep);
                const double analytic = is_weight ? lg.grad.weights[layer][idx] : lg.grad.biases[layer][idx];
                const double denom = std::max({std::abs(analytic), std::abs(fd), 1e-6});
                worst = std::max(worst, std::abs(analytic - fd) / denom);
            };
            for (std::size_t idx = 0; idx < net.weights[layer].size(); ++idx) probe(nullptr, true, idx);
            for (std::size_t idx = 0; idx < net.biases[layer].size(); ++idx) probe(nullptr, false, idx);
        }
    }

    r.passed = worst < kGradRelErrGate;
    r.detail = "max rel err " + fmt("%.3g", worst) + " over " + std::to_string(nets_checked) +
               " randomized nets, all activation/head/tail combos (gate " + fmt("%.0e", kGradRelErrGate) + ")";
    return r;
}

// ---------------------------------------------------------------- gate 3

CriterionResult check_solver_order(SuiteState&) {
    CriterionResult r{3, "solver-order", false, ""};

    const PatientParams p = PatientParams::reference();
    const SimSettings sim{3, 2000};
    const Trajectory fine = simulate_cycles(p, std::nullopt, sim);
    const std::size_t spc = sim.steps_per_cycle;

    // Windows must sit strictly inside valve-state plateaus of the last
    // cycle, clear of the elastance kink at cycle boundaries, so the right
    // side is smooth and the fourth-order halving ratio applies.
    constexpr std::size_t kWindowSamples = 120;  // 0.048 s at the base grid
    const std::size_t lo_k = 2 * spc + 100;
    const std::size_t hi_k = 3 * spc - 100 - kWindowSamples;

    struct Window {
        std::size_t begin = 0;
        double margin = 0.0;
    };
    std::vector<Window> candidates;
    for (std::size_t k0 = lo_k; k0 <= hi_k; k0 += 10) {
        double margin = 1e300;
        bool first_open = false, second_open = false, ok = true;
        for (std::size_t k = k0; k <= k0 + kWindowSamples && ok; ++k) {
            const double p_lv = fine.p_lv(k);
            const double a1 = fine.component(k, 1) - p_lv;
            const double a2 = p_lv - fine.component(k, 3);
            if (k == k0) {
                first_open = a1 > 0.0;
                second_open = a2 > 0.0;
            }
            ok = (a1 > 0.0) == first_open && (a2 > 0.0) == second_open;
            margin = std::min(margin, std::min(std::abs(a1), std::abs(a2)));
        }
        if (ok && margin > 0.5) candidates.push_back({k0, margin});
    }
    std::sort(candidates.begin(), candidates.end(),
              [](const Window& a, const Window& b) { return a.margin > b.margin; });

    std::vector<Window> picked;
    for (const Window& w : candidates) {
        bool overlaps = false;
        for (const Window& q : picked) {
            overlaps = overlaps || (w.begin < q.begin + kWindowSamples && q.begin < w.begin + kWindowSamples);
        }
        if (!overlaps) picked.push_back(w);
        if (picked.size() == 3) break;
    }
    if (picked.size() < 2) {
        r.detail = "found only " + std::to_string(picked.size()) + " smooth windows in the last cycle";
        return r;
    }

    const auto rhs = [&p](double t, const CardiacState& x) { return rhs5(t, x, p); };
    std::vector<double> ratios;
    for (const Window& w : picked) {
        std::array<double, 5> scale{};
        for (std::size_t k = w.begin; k <= w.begin + kWindowSamples; ++k) {
            for (std::size_t j = 0; j < 5; ++j) scale[j] = std::max(scale[j], std::abs(fine.component(k, j)));
        }
        for (double& s : scale) s = std::max(s, 1.0);

        const CardiacState ic = fine.state(w.begin);
        const double ta = fine.time(w.begin);
        const double tb = ta + static_cast<double>(kWindowSamples) * fine.dt;

        std::array<std::vector<CardiacState>, 3> grids;
        const double dts[] = {0.004, 0.002, 0.001};
        for (int d = 0; d < 3; ++d) {
            grids[d] = integrate_grid(rhs, ic, ta, tb, dts[d]);
        }

        // RMS over every coarse-grid sample time, not just the window end: a
        // single endpoint can sit near a zero of the leading error term, in
        // which case the next order dominates and the ratio drifts toward 32.
        const std::size_t coarse_n = grids[0].size();
        const auto err = [&scale, &grids, coarse_n](int a, int b, std::size_t sa, std::size_t sb) {
            double acc = 0.0;
            for (std::size_t k = 1; k < coarse_n; ++k) {
                for (std::size_t j = 0; j < 5; ++j) {
                    const double e = (grids[a][k * sa][j] - grids[b][k * sb][j]) / scale[j];
                    acc += e * e;
                }
            }
            return std::sqrt(acc / (5.0 * static_cast<double>(coarse_n - 1)));
        };
        const double e1 = err(0, 1, 1, 2);
        const double e2 = err(1, 2, 2, 4);
        if (e2 < 1e-14) {
            r.detail = "halving differences at roundoff; window too quiet for a ratio";
            return r;
        }
        ratios.push_back(e1 / e2);
    }

    r.passed = true;
    std::string list;
    for (double ratio : ratios) {
        r.passed = r.passed && ratio >= kRichardsonLo && ratio <= kRichardsonHi;
        list += (list.empty() ? "" : ", ") + fmt("%.2f", ratio);
    }
    r.detail = "halving ratios " + list + " over " + std::to_string(ratios.size()) +
               " smooth windows (gate [" + fmt("%.0f", kRichardsonLo) + ", " + fmt("%.0f", kRichardsonHi) + "])";
    return r;
}

// ---------------------------------------------------------------- gate 4

CriterionResult check_limit_cycle(SuiteState&) {
    CriterionResult r{4, "limit-cycle-convergence", false, ""};

    const Trajectory traj = simulate_cycles(PatientParams::reference());
    const PvLoop last = resample_loop(pv_loop(traj, 2), 256);
    const PvLoop prev = resample_loop(pv_loop(traj, 1), 256);
    const double v_ed = ed_es_volumes(traj).v_ed;

    double worst = 0.0;
    for (std::size_t i = 0; i < last.points.size(); ++i) {
        worst = std::max(worst, std::abs(last.points[i].v_lv - prev.points[i].v_lv));
        worst = std::max(worst, std::abs(last.points[i].p_lv - prev.points[i].p_lv));
    }
    const double gate = kLimitCycleFrac * v_ed;
    r.passed = worst < gate;
    r.detail = "max pointwise loop change " + fmt("%.4f", worst) + " after 3 cycles (gate " +
               fmt("%.4f", gate) + " = 1% of V_ED " + fmt("%.2f", v_ed) + ")";
    return r;
}

// ---------------------------------------------------------------- gate 5

CriterionResult check_recovery(SuiteState&) {
    CriterionResult r{5, "parameter-recovery", false, ""};

    const PatientParams truth = PatientParams::reference();
    const Trajectory traj = simulate_cycles(truth, std::nullopt, recovery_sim_settings());
    const RecoveredParams rec = recover_all(traj, &truth);
    const auto& errs = *rec.rel_errors;

    const double elastance_worst =
        std::max({errs.at("e_max"), errs.at("e_min"), errs.at("v_d")});
    const double t_c_err = std::abs(rec.elastance.t_c - truth.t_c);

    const char* static_names[] = {"r_m", "r_a", "r_s", "c_r", "c_s", "c_a", "l_s", "r_c"};
    double statics_worst = 0.0;
    std::string statics_worst_name;
    for (const char* name : static_names) {
        if (errs.at(name) > statics_worst) {
            statics_worst = errs.at(name);
            statics_worst_name = name;
        }
    }
    double residual_worst = 0.0;
    for (double res : rec.statics.row_rel_residual) residual_worst = std::max(residual_worst, res);

    r.passed = rec.elastance.periodic && elastance_worst <= kElastanceRelGate && t_c_err <= traj.dt &&
               statics_worst <= kStaticsRelGate && residual_worst < kLaplaceResidualGate;
    r.detail = "elastance worst rel " + fmt("%.4f", elastance_worst) + " (gate 0.01), t_c err " +
               fmt("%.2e", t_c_err) + " s (gate dt=" + fmt("%.4g", traj.dt) + "), statics worst rel " +
               fmt("%.4f", statics_worst) + " (" + statics_worst_name + ", gate 0.02), max row residual " +
               fmt("%.2e", residual_worst) + " (gate 1e-3)";
    return r;
}

// ---------------------------------------------------------------- gate 6

CriterionResult check_end_to_end(SuiteState& state) {
    CriterionResult r{6, "end-to-end-inverse", false, ""};
    if (!state.pretrain) {
        r.detail = "surrogate unavailable (gate 1 did not produce one)";
        return r;
    }

    state.surrogate_json_before = surrogate_to_json(state.pretrain->surrogate);
    const FinetuneDataset data =
        generate_finetune_dataset(1000, state.bounds, kFinetuneSeed, kRenderSeed, 0.0);
    state.finetune = finetune_backbone(data, state.pretrain->surrogate);
    state.surrogate_json_after = surrogate_to_json(state.pretrain->surrogate);

    const FinetuneMetrics& m = state.finetune->metrics;
    r.passed = m.test_ef_mae_pp_resim <= kEndToEndEfGatePp && m.test_v_ed_mae_ml <= kEndToEndVolGateMl &&
               m.test_v_es_mae_ml <= kEndToEndVolGateMl;
    r.detail = "re-simulated test EF MAE " + fmt("%.3f", m.test_ef_mae_pp_resim) + " pp (gate 7), V_ED MAE " +
               fmt("%.2f", m.test_v_ed_mae_ml) + " ml, V_ES MAE " + fmt("%.2f", m.test_v_es_mae_ml) +
               " ml (gate 15 each) on " + std::to_string(m.test_count) + " test rows; surrogate-path EF MAE " +
               fmt("%.3f", m.test_ef_mae_pp_surrogate) + " pp";
    return r;
}

// ---------------------------------------------------------------- gate 7

CriterionResult check_lvad_trial(SuiteState& state) {
    CriterionResult r{7, "lvad-trial-direction", false, ""};

    const std::vector<PatientParams> cohort = low_ef_cohort(400, 100, state.bounds, kCohortSeed);
    LvadParams lvad = LvadParams::reference();
    const double omega = calibrate_omega(cohort, lvad, default_omega_levels());
    lvad.omega_schedule = OmegaSchedule::constant(omega);
    const TrialResult trial = run_lvad_trial(cohort, lvad);

    r.passed = trial.mean_delta_ef > 0.0 && trial.spearman_baseline_delta < 0.0;
    r.detail = "calibrated omega " + fmt("%.0f", omega) + ": mean dEF " +
               fmt("%+.2f", 100.0 * trial.mean_delta_ef) + " pp (gate > 0), spearman(EF0, dEF) " +
               fmt("%.3f", trial.spearman_baseline_delta) + " (gate < 0), failures " +
               std::to_string(trial.failures) + "/" + std::to_string(cohort.size());
    return r;
}

// ---------------------------------------------------------------- gate 8

bool nearly(double a, double b, double rel = 1e-8) {
    return std::abs(a - b) <= rel * std::max({1.0, std::abs(a), std::abs(b)});
}

bool check_containment(const SuiteState& state) {
    for (const SampleMode mode : {SampleMode::uniform, SampleMode::grid}) {
        for (const Theta& theta : sample_thetas(500, state.bounds, 707, mode)) {
            if (!state.bounds.contains(theta)) return false;
        }
    }

    // Predicted parameters are squashed into the box by construction; check
    // the trained backbone when there is one, a freshly initialized one
    // otherwise.
    Mlp net;
    if (state.finetune) {
        net = state.finetune->backbone.net;
    } else {
        std::vector<double> lo(state.bounds.lo.begin(), state.bounds.lo.end());
        std::vector<double> hi(state.bounds.hi.begin(), state.bounds.hi.end());
        net = make_mlp({RenderOperator::kOutput, 32, kLearnableCount}, Activation::relu,
                       HeadKind::range_sigmoid, 808, lo, hi);
    }
    Rng rng(808);
    for (int i = 0; i < 50; ++i) {
        std::vector<double> y(net.input_dim());
        for (auto& v : y) v = rng.uniform(-3.0, 3.0);
        const std::vector<double> out = forward(net, y);
        Theta theta{};
        std::copy(out.begin(), out.end(), theta.begin());
        if (!state.bounds.contains(theta)) return false;
    }
    return true;
}

bool check_elastance_invariants() {
    Rng rng(909);
    for (int i = 0; i < 20; ++i) {
        ElastanceSpec spec;
        spec.e_min = rng.uniform(0.02, 0.1);
        spec.e_max = rng.uniform(0.5, 3.5);
        spec.t_c = rng.uniform(0.4, 1.7);
        if (elastance(spec, 0.0) != spec.e_min) return false;
        for (int k = 0; k < 100; ++k) {
            const double t = rng.uniform(0.0, 3.0 * spec.t_c);
            const double e = elastance(spec, t);
            if (!(e >= spec.e_min - 1e-12) || !(e <= spec.e_max + 1e-12)) return false;
            if (std::abs(e - elastance(spec, t + spec.t_c)) > 1e-9 * spec.e_max) return false;
        }
    }
    return true;
}

bool check_flow_balance() {
    Rng rng(1010);
    for (int i = 0; i < 200; ++i) {
        PatientParams p = PatientParams::reference();
        p.r_m = rng.uniform(0.005, 0.1);
        p.r_a = rng.uniform(0.001, 0.25);
        p.e_max = rng.uniform(0.5, 3.5);
        p.e_min = rng.uniform(0.02, 0.1);
        p.v_d = rng.uniform(4.0, 25.0);
        p.t_c = rng.uniform(0.4, 1.7);

        LvadParams lvad = LvadParams::reference();
        lvad.omega_schedule = OmegaSchedule::constant(rng.uniform(0.0, 16000.0));

        const double t = rng.uniform(0.0, 2.0);
        CardiacState x6(6);
        x6[0] = rng.uniform(1.0, 250.0);
        x6[1] = rng.uniform(0.0, 30.0);
        x6[2] = rng.uniform(20.0, 120.0);
        x6[3] = rng.uniform(20.0, 140.0);
        x6[4] = rng.uniform(-100.0, 400.0);
        x6[5] = rng.uniform(-100.0, 300.0);
        CardiacState x5s(5);
        for (std::size_t j = 0; j < 5; ++j) x5s[j] = x6[j];

        // Total stored charge x1 + c_r x2 + c_s x3 + c_a x4 only moves
        // through x5/x6 transfers, which cancel in the sum.
        const auto charge_rate = [&p](const CardiacState& dx) {
            return dx[0] + p.c_r * dx[1] + p.c_s * dx[2] + p.c_a * dx[3];
        };
        const auto scale_of = [&p](const CardiacState& dx) {
            return std::abs(dx[0]) + p.c_r * std::abs(dx[1]) + p.c_s * std::abs(dx[2]) +
                   p.c_a * std::abs(dx[3]) + 1.0;
        };
        const CardiacState d5 = rhs5(t, x5s, p);
        const CardiacState d6 = rhs6(t, x6, p, lvad);
        if (std::abs(charge_rate(d5)) > 1e-10 * scale_of(d5)) return false;
        if (std::abs(charge_rate(d6)) > 1e-10 * scale_of(d6)) return false;
    }
    return true;
}

bool check_frozen_surrogate(const SuiteState& state) {
    // The full-size run, when gate 6 produced one.
    if (state.finetune && state.surrogate_json_before != state.surrogate_json_after) return false;

    // Independent micro-run so the freeze property is exercised even if the
    // heavy gates were skipped by failure.
    const ParamBounds bounds = ParamBounds::defaults();
    const PretextDataset pretext = generate_pretext_dataset(32, bounds, 1111);
    PretrainOptions popt;
    popt.hidden = {8};
    popt.train.epochs = 3;
    popt.train.batch_size = 8;
    popt.eval_n = 8;
    const PretrainResult pre = pretrain_surrogate(pretext, popt);

    const std::string before = surrogate_to_json(pre.surrogate);
    const FinetuneDataset data = generate_finetune_dataset(30, bounds, 1212, 1313, 0.0);
    FinetuneOptions fopt;
    fopt.hidden = {8};
    fopt.train.epochs = 3;
    fopt.train.batch_size = 8;
    finetune_backbone(data, pre.surrogate, fopt);
    return surrogate_to_json(pre.surrogate) == before;
}

bool check_determinism() {
    const ParamBounds bounds = ParamBounds::defaults();
    const FinetuneDataset a = generate_finetune_dataset(60, bounds, 4242, 4343, 0.05);
    const FinetuneDataset b = generate_finetune_dataset(60, bounds, 4242, 4343, 0.05);
    if (a.measurements.size() != b.measurements.size()) return false;
    for (std::size_t i = 0; i < a.measurements.size(); ++i) {
        const Measurement& ma = a.measurements[i];
        const Measurement& mb = b.measurements[i];
        if (ma.y != mb.y || ma.v_ed != mb.v_ed || ma.v_es != mb.v_es || ma.theta != mb.theta) return false;
    }

    TrainData data;
    data.input_dim = kLearnableCount;
    data.target_dim = 2;
    for (std::size_t i = 0; i < 20 && i < a.measurements.size(); ++i) {
        std::vector<double> y = {a.measurements[i].v_ed / 100.0, a.measurements[i].v_es / 100.0};
        data.add(a.measurements[i].theta, y);
    }
    TrainConfig config;
    config.epochs = 5;
    config.batch_size = 8;
    config.seed = 5;
    const Mlp net = make_mlp({kLearnableCount, 6, 2}, Activation::tanh_fn, HeadKind::linear, 5151);
    const TrainResult ra = train(net, data, config);
    const TrainResult rb = train(net, data, config);
    return ra.loss_history == rb.loss_history && ra.net.weights == rb.net.weights &&
           ra.net.biases == rb.net.biases;
}

bool check_round_trips() {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "cardiotwin-acceptance-scratch";
    fs::create_directories(dir);
    bool ok = true;

    // Parameter JSON.
    PatientParams p = PatientParams::reference();
    p.r_m = 0.0123456789;
    p.start_v = 137.123456789;
    const PatientParams p2 = patient_params_from_json(to_json_string(p));
    ok = ok && p2.r_m == p.r_m && p2.start_v == p.start_v && p2.t_c == p.t_c;

    LvadParams lvad = LvadParams::reference();
    lvad.omega_schedule = OmegaSchedule::ramp(0.0, 12345.6789, 2.5);
    const LvadParams lvad2 = lvad_params_from_json(to_json_string(lvad));
    ok = ok && lvad2.omega_schedule.end == lvad.omega_schedule.end &&
         lvad2.omega_schedule.ramp_duration == lvad.omega_schedule.ramp_duration;

    const ParamBounds bounds = ParamBounds::defaults();
    const ParamBounds bounds2 = param_bounds_from_json(to_json_string(bounds));
    ok = ok && bounds2.lo == bounds.lo && bounds2.hi == bounds.hi && bounds2.c_a == bounds.c_a;

    // Network checkpoint JSON is bitwise.
    const Mlp net = make_mlp({3, 4, 2}, Activation::relu, HeadKind::range_sigmoid, 5,
                             {-1.0, 0.0}, {1.0, 2.0});
    const Mlp net2 = mlp_from_json(mlp_to_json(net));
    ok = ok && net2.weights == net.weights && net2.biases == net.biases && net2.dims == net.dims;

    // Trajectory and PV-loop CSV at 9 significant digits.
    const Trajectory traj = simulate_cycles(PatientParams::reference(), std::nullopt, SimSettings{1, 200});
    const std::string traj_path = (dir / "traj.csv").string();
    write_trajectory_csv(traj_path, traj, "acceptance");
    const StateSeries series = read_trajectory_csv(traj_path);
    ok = ok && series.size() == traj.size() && series.dim == traj.dim;
    if (ok) {
        for (std::size_t k = 0; k < traj.size(); ++k) {
            for (std::size_t j = 0; j < traj.dim; ++j) {
                ok = ok && nearly(series.component(k, j), traj.component(k, j));
            }
            ok = ok && nearly(series.p_lv[k], traj.p_lv(k)) && nearly(series.v_lv[k], traj.v_lv(k));
        }
    }

    const PvLoop loop = pv_loop(traj);
    const std::string loop_path = (dir / "loop.csv").string();
    write_pv_loop_csv(loop_path, loop, "acceptance");
    const PvLoop loop2 = read_pv_loop_csv(loop_path);
    ok = ok && loop2.cycle_index == loop.cycle_index && loop2.points.size() == loop.points.size();
    if (ok) {
        for (std::size_t i = 0; i < loop.points.size(); ++i) {
            ok = ok && nearly(loop2.points[i].v_lv, loop.points[i].v_lv) &&
                 nearly(loop2.points[i].p_lv, loop.points[i].p_lv);
        }
    }

    // Dataset CSVs with their sidecars.
    const PretextDataset pretext = generate_pretext_dataset(16, bounds, 77);
    write_pretext_csv(pretext, (dir / "pretext.csv").string(), (dir / "pretext.json").string());
    const PretextDataset pretext2 =
        read_pretext_csv((dir / "pretext.csv").string(), (dir / "pretext.json").string());
    ok = ok && pretext2.examples.size() == pretext.examples.size() && pretext2.seed == pretext.seed;
    if (ok) {
        for (std::size_t i = 0; i < pretext.examples.size(); ++i) {
            ok = ok && nearly(pretext2.examples[i].v_ed, pretext.examples[i].v_ed);
            for (std::size_t j = 0; j < kLearnableCount; ++j) {
                ok = ok && nearly(pretext2.examples[i].theta[j], pretext.examples[i].theta[j]);
            }
        }
    }

    const FinetuneDataset fine = generate_finetune_dataset(12, bounds, 88, 99, 0.0);
    write_finetune_csv(fine, (dir / "finetune.csv").string(), (dir / "finetune.json").string());
    const FinetuneDataset fine2 =
        read_finetune_csv((dir / "finetune.csv").string(), (dir / "finetune.json").string());
    ok = ok && fine2.measurements.size() == fine.measurements.size() &&
         fine2.render_seed == fine.render_seed;
    if (ok) {
        for (std::size_t i = 0; i < fine.measurements.size(); ++i) {
            ok = ok && nearly(fine2.measurements[i].v_es, fine.measurements[i].v_es);
            for (std::size_t j = 0; j < fine.measurements[i].y.size(); ++j) {
                ok = ok && nearly(fine2.measurements[i].y[j], fine.measurements[i].y[j]);
            }
        }
    }

    std::error_code ec;
    fs::remove_all(dir, ec);  // best effort; scratch only
    return ok;
}

CriterionResult check_invariants(SuiteState& state) {
    CriterionResult r{8, "invariant-suite", false, ""};

    struct Group {
        const char* name;
        bool ok;
    };
    const Group groups[] = {
        {"bounds-containment", check_containment(state)},
        {"elastance-range-periodicity", check_elastance_invariants()},
        {"flow-balance", check_flow_balance()},
        {"frozen-surrogate", check_frozen_surrogate(state)},
        {"determinism", check_determinism()},
        {"round-trips", check_round_trips()},
    };

    std::string failing;
    int ok_count = 0;
    for (const Group& g : groups) {
        if (g.ok) {
            ++ok_count;
        } else {
            failing += failing.empty() ? g.name : std::string(", ") + g.name;
        }
    }
    r.passed = failing.empty();
    r.detail = std::to_string(ok_count) + "/6 invariant groups hold" +
               (failing.empty() ? "" : "; failing: " + failing);
    return r;
}

}  // namespace

AcceptanceReport run_acceptance_suite(const AcceptanceProgress& progress) {
    SuiteState state;
    AcceptanceReport report;

    using Check = CriterionResult (*)(SuiteState&);
    const Check checks[] = {
        check_pretext_fidelity, check_gradients,   check_solver_order, check_limit_cycle,
        check_recovery,         check_end_to_end,  check_lvad_trial,   check_invariants,
    };
    const char* names[] = {
        "surrogate-pretext-fidelity", "gradient-correctness", "solver-order", "limit-cycle-convergence",
        "parameter-recovery",         "end-to-end-inverse",   "lvad-trial-direction", "invariant-suite",
    };

    for (int i = 0; i < 8; ++i) {
        CriterionResult result;
        try {
            result = checks[i](state);
        } catch (const std::exception& e) {
            result = CriterionResult{i + 1, names[i], false, std::string("exception: ") + e.what()};
        }
        report.results.push_back(result);
        if (progress) progress(report.results.back());
    }
    return report;
}

std::string acceptance_to_json(const AcceptanceReport& report, int indent) {
    nlohmann::json j;
    j["all_passed"] = report.all_passed();
    j["criteria"] = nlohmann::json::array();
    for (const auto& r : report.results) {
        j["criteria"].push_back({
            {"number", r.number},
            {"name", r.name},
            {"passed", r.passed},
            {"detail", r.detail},
        });
    }
    return j.dump(indent);
}

}  // namespace cardiotwin
