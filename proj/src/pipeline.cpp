#include "cardiotwin/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "cardiotwin/csv.hpp"
#include "cardiotwin/errors.hpp"

namespace cardiotwin {

using nlohmann::json;

std::array<double, 2> Surrogate::predict_volumes(const Theta& theta) const {
    Theta unit{};
    for (std::size_t i = 0; i < kLearnableCount; ++i) {
        const double span = input_hi[i] - input_lo[i];
        unit[i] = span == 0.0 ? 0.0 : (theta[i] - input_lo[i]) / span;
    }
    const std::vector<double> out = forward(net, unit);
    return {out[0] * target_scale, out[1] * target_scale};
}

Mlp Surrogate::physical_input_tail() const {
    // normalize(theta) = (theta - lo) / (hi - lo) is affine, so it folds into
    // the first layer: W' = W / span (column-wise), b' = b - W' lo.
    Mlp tail = net;
    const std::size_t in_n = tail.dims[0];
    const std::size_t out_n = tail.dims[1];
    for (std::size_t r = 0; r < out_n; ++r) {
        double shift = 0.0;
        for (std::size_t c = 0; c < in_n; ++c) {
            const double span = input_hi[c] - input_lo[c];
            if (span == 0.0) throw ValidationError("surrogate: degenerate input bounds cannot be folded");
            double& w = tail.weights[0][r * in_n + c];
            w /= span;
            shift += w * input_lo[c];
        }
        tail.biases[0][r] -= shift;
    }
    return tail;
}

std::string surrogate_to_json(const Surrogate& s, int indent) {
    json j;
    j["format"] = "cardiotwin-surrogate-v1";
    j["mlp"] = json::parse(mlp_to_json(s.net));
    j["input_lo"] = s.input_lo;
    j["input_hi"] = s.input_hi;
    j["target_scale"] = s.target_scale;
    return j.dump(indent);
}

Surrogate surrogate_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ValidationError(std::string("surrogate: malformed JSON: ") + e.what());
    }
    for (auto it = j.begin(); it != j.end(); ++it) {
        const std::string& k = it.key();
        if (k != "format" && k != "mlp" && k != "input_lo" && k != "input_hi" && k != "target_scale") {
            throw ValidationError("surrogate: unknown key '" + k + "'");
        }
    }
    if (!j.contains("format") || j.at("format") != "cardiotwin-surrogate-v1") {
        throw ValidationError("surrogate: missing or unsupported format tag");
    }
    Surrogate s;
    s.net = mlp_from_json(j.at("mlp").dump());
    const auto lo = j.at("input_lo").get<std::vector<double>>();
    const auto hi = j.at("input_hi").get<std::vector<double>>();
    if (lo.size() != kLearnableCount || hi.size() != kLearnableCount) {
        throw ValidationError("surrogate: input bounds must have 7 entries");
    }
    std::copy(lo.begin(), lo.end(), s.input_lo.begin());
    std::copy(hi.begin(), hi.end(), s.input_hi.begin());
    s.target_scale = j.at("target_scale").get<double>();
    if (!(s.target_scale > 0.0)) throw ValidationError("surrogate: target_scale must be positive");
    return s;
}

void save_surrogate(const Surrogate& s, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw FileError("cannot write surrogate: " + path);
    out << surrogate_to_json(s) << '\n';
}

Surrogate load_surrogate(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FileError("cannot open surrogate: " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return surrogate_from_json(text);
}

std::string backbone_to_json(const Backbone& b, int indent) {
    json j;
    j["format"] = "cardiotwin-backbone-v1";
    j["mlp"] = json::parse(mlp_to_json(b.net));
    j["bounds"] = json::parse(to_json_string(b.bounds));
    return j.dump(indent);
}

Backbone backbone_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ValidationError(std::string("backbone: malformed JSON: ") + e.what());
    }
    for (auto it = j.begin(); it != j.end(); ++it) {
        const std::string& k = it.key();
        if (k != "format" && k != "mlp" && k != "bounds") {
            throw ValidationError("backbone: unknown key '" + k + "'");
        }
    }
    if (!j.contains("format") || j.at("format") != "cardiotwin-backbone-v1") {
        throw ValidationError("backbone: missing or unsupported format tag");
    }
    Backbone b;
    b.net = mlp_from_json(j.at("mlp").dump());
    b.bounds = param_bounds_from_json(j.at("bounds").dump());
    return b;
}

void save_backbone(const Backbone& b, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw FileError("cannot write backbone: " + path);
    out << backbone_to_json(b) << '\n';
}

Backbone load_backbone(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FileError("cannot open backbone: " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return backbone_from_json(text);
}

PretrainResult pretrain_surrogate(const PretextDataset& data, const PretrainOptions& options,
                                  const SimSettings& sim) {
    if (data.examples.empty()) throw TrainingError("pretrain: empty pretext dataset");

    Surrogate s;
    s.input_lo = data.bounds.lo;
    s.input_hi = data.bounds.hi;

    TrainData train_data;
    for (const PretextExample& e : data.examples) {
        const Theta unit = data.bounds.normalize(e.theta);
        const std::array<double, 2> target{e.v_ed / s.target_scale, e.v_es / s.target_scale};
        train_data.add(unit, target);
    }

    std::vector<std::size_t> dims{kLearnableCount};
    dims.insert(dims.end(), options.hidden.begin(), options.hidden.end());
    dims.push_back(2);
    Mlp net = make_mlp(std::move(dims), Activation::tanh_fn, HeadKind::linear, options.init_seed);

    TrainResult trained = train(std::move(net), train_data, options.train);
    s.net = std::move(trained.net);

    PretrainResult result;
    result.surrogate = std::move(s);
    result.loss_history = std::move(trained.loss_history);

    // Held-out scoring: fresh draws, fresh simulations, EF from predicted
    // vs true volume pairs.
    const PretextDataset eval = generate_pretext_dataset(options.eval_n, data.bounds, options.eval_seed,
                                                         SampleMode::uniform, sim);
    double abs_err = 0.0;
    for (const PretextExample& e : eval.examples) {
        const auto pred = result.surrogate.predict_volumes(e.theta);
        const double ef_pred = (pred[0] - pred[1]) / pred[0];
        const double ef_true = (e.v_ed - e.v_es) / e.v_ed;
        abs_err += std::abs(ef_pred - ef_true);
    }
    result.eval_count = eval.examples.size();
    result.eval_ef_mae_pp = 100.0 * abs_err / static_cast<double>(eval.examples.size());
    return result;
}

FinetuneResult finetune_backbone(const FinetuneDataset& data, const Surrogate& surrogate,
                                 const FinetuneOptions& options, const SimSettings& sim) {
    const std::size_t n_train = data.n_train();
    const std::size_t n_test = data.n_test();
    if (n_train == 0 || n_test == 0) throw TrainingError("finetune: dataset too small to split");
    if (!data.measurements.empty() && data.measurements.front().y.size() != RenderOperator::kOutput) {
        throw TrainingError("finetune: unexpected measurement width");
    }

    TrainData train_data;
    for (std::size_t i = 0; i < n_train; ++i) {
        const Measurement& m = data.measurements[i];
        const std::array<double, 2> target{m.v_ed / surrogate.target_scale, m.v_es / surrogate.target_scale};
        train_data.add(m.y, target);
    }

    std::vector<std::size_t> dims{RenderOperator::kOutput};
    dims.insert(dims.end(), options.hidden.begin(), options.hidden.end());
    dims.push_back(kLearnableCount);
    Mlp net = make_mlp(std::move(dims), Activation::relu, HeadKind::range_sigmoid, options.init_seed,
                       std::vector<double>(data.bounds.lo.begin(), data.bounds.lo.end()),
                       std::vector<double>(data.bounds.hi.begin(), data.bounds.hi.end()));

    const Mlp tail = surrogate.physical_input_tail();
    TrainResult trained = train(std::move(net), train_data, options.train, &tail);

    FinetuneResult result;
    result.backbone.net = std::move(trained.net);
    result.backbone.bounds = data.bounds;
    result.loss_history = std::move(trained.loss_history);

    // Test-split fidelity, scored both through the surrogate's volume
    // predictions and by re-simulating the predicted parameters.
    const std::size_t test_begin = n_train + data.n_val();
    double ef_err_surr = 0.0, ef_err_resim = 0.0, ved_err = 0.0, ves_err = 0.0;
    std::size_t counted = 0;
    for (std::size_t i = test_begin; i < data.measurements.size(); ++i) {
        const Measurement& m = data.measurements[i];
        const double ef_true = ef_from_volumes(m.v_ed, m.v_es);

        const std::vector<double> theta_v = forward(result.backbone.net, m.y);
        Theta theta{};
        std::copy(theta_v.begin(), theta_v.end(), theta.begin());

        const auto vols = surrogate.predict_volumes(theta);
        ef_err_surr += std::abs((vols[0] - vols[1]) / vols[0] - ef_true);

        const Trajectory traj = simulate_cycles(data.bounds.assemble(theta), std::nullopt, sim);
        const EdEs edes = ed_es_volumes(traj);
        ef_err_resim += std::abs(ejection_fraction(edes) - ef_true);
        ved_err += std::abs(edes.v_ed - m.v_ed);
        ves_err += std::abs(edes.v_es - m.v_es);
        ++counted;
    }
    result.metrics.test_count = counted;
    if (counted > 0) {
        const auto inv = 1.0 / static_cast<double>(counted);
        result.metrics.test_ef_mae_pp_surrogate = 100.0 * ef_err_surr * inv;
        result.metrics.test_ef_mae_pp_resim = 100.0 * ef_err_resim * inv;
        result.metrics.test_v_ed_mae_ml = ved_err * inv;
        result.metrics.test_v_es_mae_ml = ves_err * inv;
    }
    return result;
}

TwinPrediction predict_twin(std::span<const double> y, const Backbone& backbone, const SimSettings& sim) {
    if (y.size() != backbone.net.input_dim()) throw ValidationError("predict_twin: measurement width mismatch");

    TwinPrediction twin;
    const std::vector<double> theta_v = forward(backbone.net, y);
    std::copy(theta_v.begin(), theta_v.end(), twin.theta_hat.begin());
    twin.params = backbone.bounds.assemble(twin.theta_hat);
    twin.trajectory = simulate_cycles(twin.params, std::nullopt, sim);
    twin.loop = pv_loop(twin.trajectory);
    twin.edes = ed_es_volumes(twin.trajectory);
    twin.ef = ejection_fraction(twin.edes);
    return twin;
}

TrialResult run_lvad_trial(const std::vector<PatientParams>& cohort, const LvadParams& lvad,
                           const SimSettings& sim) {
    if (cohort.empty()) throw ValidationError("trial: empty cohort");
    lvad.validate();

    TrialResult trial;
    trial.omega_level = lvad.omega_schedule.end;
    trial.rows.reserve(cohort.size());
    for (std::size_t id = 0; id < cohort.size(); ++id) {
        try {
            const Trajectory base = simulate_cycles(cohort[id], std::nullopt, sim);
            const Trajectory pumped = simulate_cycles(cohort[id], lvad, sim);
            TrialRow row;
            row.patient_id = id;
            row.ef_baseline = ejection_fraction(ed_es_volumes(base));
            row.ef_lvad = ejection_fraction(ed_es_volumes(pumped));
            row.delta_ef = row.ef_lvad - row.ef_baseline;
            trial.rows.push_back(row);
        } catch (const SimulationError&) {
            ++trial.failures;
        } catch (const ValidationError&) {
            ++trial.failures;
        }
    }
    if (trial.failures * 20 > cohort.size()) {
        throw ValidationError("trial: more than 5% of patients failed to simulate (" +
                              std::to_string(trial.failures) + " of " + std::to_string(cohort.size()) + ")");
    }
    if (trial.rows.empty()) throw ValidationError("trial: no patient simulated successfully");

    std::vector<double> base_ef, delta;
    base_ef.reserve(trial.rows.size());
    delta.reserve(trial.rows.size());
    for (const TrialRow& r : trial.rows) {
        trial.mean_ef_baseline += r.ef_baseline;
        trial.mean_ef_lvad += r.ef_lvad;
        trial.mean_delta_ef += r.delta_ef;
        base_ef.push_back(r.ef_baseline);
        delta.push_back(r.delta_ef);
    }
    const auto inv = 1.0 / static_cast<double>(trial.rows.size());
    trial.mean_ef_baseline *= inv;
    trial.mean_ef_lvad *= inv;
    trial.mean_delta_ef *= inv;
    trial.spearman_baseline_delta = trial.rows.size() >= 2 ? spearman(base_ef, delta) : 0.0;
    return trial;
}

std::vector<SweepRow> omega_sweep(const PatientParams& patient, const LvadParams& lvad_base,
                                  std::vector<double> levels, const SimSettings& sim) {
    if (levels.empty()) throw ValidationError("sweep: need at least one level");
    std::sort(levels.begin(), levels.end());

    std::vector<SweepRow> rows;
    rows.reserve(levels.size());
    for (const double omega : levels) {
        SweepRow row;
        row.omega = omega;
        LvadParams lvad = lvad_base;
        lvad.omega_schedule = OmegaSchedule::constant(omega);
        try {
            const Trajectory traj = simulate_cycles(patient, lvad, sim);
            row.edes = ed_es_volumes(traj);
            row.ef = ejection_fraction(row.edes);
            row.loop = pv_loop(traj);
            row.ok = true;
        } catch (const std::runtime_error& e) {
            row.ok = false;
            row.error = e.what();
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

std::vector<double> default_omega_levels() {
    return {0.0, 2000.0, 4000.0, 6000.0, 8000.0, 10000.0, 12000.0, 14000.0, 16000.0};
}

double calibrate_omega(const std::vector<PatientParams>& cohort, const LvadParams& lvad_base,
                       const std::vector<double>& levels, const SimSettings& sim) {
    if (cohort.empty()) throw ValidationError("calibrate_omega: empty cohort");
    if (levels.empty()) throw ValidationError("calibrate_omega: no levels to try");

    std::vector<double> sorted = levels;
    std::sort(sorted.begin(), sorted.end());
    for (const double omega : sorted) {
        LvadParams lvad = lvad_base;
        lvad.omega_schedule = OmegaSchedule::constant(omega);
        double mean_delta = 0.0;
        bool all_ok = true;
        for (const PatientParams& p : cohort) {
            try {
                const Trajectory base = simulate_cycles(p, std::nullopt, sim);
                const Trajectory pumped = simulate_cycles(p, lvad, sim);
                // Below the speed where the pump head beats the aortic
                // gradient the cannula regurgitates during diastole; such a
                // level is not a usable operating point even when the preload
                // shift happens to raise the ejection fraction. Require the
                // flow to stay forward through the whole settled final cycle
                // for every patient.
                const std::size_t n = pumped.size();
                const std::size_t spc = sim.steps_per_cycle;
                double q_min = pumped.component(n - 1, 5);
                for (std::size_t k = n - 1 - spc; k < n; ++k) q_min = std::min(q_min, pumped.component(k, 5));
                all_ok = q_min >= 0.0;
                if (!all_ok) break;
                mean_delta += ejection_fraction(ed_es_volumes(pumped)) - ejection_fraction(ed_es_volumes(base));
            } catch (const std::runtime_error&) {
                all_ok = false;
                break;
            }
        }
        if (all_ok && mean_delta > 0.0) return omega;
    }
    throw ValidationError(
        "calibrate_omega: no pump speed gave regurgitation-free flow and a mean ejection-fraction gain");
}

std::vector<PatientParams> low_ef_cohort(std::size_t pool_n, std::size_t cohort_n, const ParamBounds& bounds,
                                         std::uint64_t seed, const SimSettings& sim) {
    if (cohort_n == 0 || pool_n < cohort_n) throw ValidationError("cohort: pool must be at least cohort size");

    struct Scored {
        PatientParams params;
        double ef;
    };
    std::vector<Scored> scored;
    scored.reserve(pool_n);
    for (const PatientParams& p : sample_params(pool_n, bounds, seed, SampleMode::uniform)) {
        try {
            const Trajectory traj = simulate_cycles(p, std::nullopt, sim);
            scored.push_back({p, ejection_fraction(ed_es_volumes(traj))});
        } catch (const std::runtime_error&) {
            // skip: the cohort only needs simulable patients
        }
    }
    if (scored.size() < cohort_n) throw ValidationError("cohort: too few simulable patients in the pool");
    std::stable_sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) { return a.ef < b.ef; });

    std::vector<PatientParams> cohort;
    cohort.reserve(cohort_n);
    for (std::size_t i = 0; i < cohort_n; ++i) cohort.push_back(scored[i].params);
    return cohort;
}

void write_trial_csv(const TrialResult& trial, const std::string& path, const std::string& config_hash) {
    std::vector<std::vector<double>> rows;
    rows.reserve(trial.rows.size());
    for (const TrialRow& r : trial.rows) {
        rows.push_back({static_cast<double>(r.patient_id), r.ef_baseline, r.ef_lvad, r.delta_ef});
    }
    write_csv(path,
              meta_comments("trial", {{"config_hash", config_hash},
                                      {"omega", fmt_g9(trial.omega_level)},
                                      {"failures", std::to_string(trial.failures)}}),
              {"patient_id", "ef_baseline", "ef_lvad", "delta_ef"}, rows);
}

void write_sweep_csv(const std::vector<SweepRow>& rows, const std::string& path, const std::string& config_hash) {
    std::vector<std::vector<double>> out;
    out.reserve(rows.size());
    for (const SweepRow& r : rows) {
        if (!r.ok) continue;  // failed levels carry no volumes; they are reported in the summary
        out.push_back({r.omega, r.edes.v_ed, r.edes.v_es, r.ef});
    }
    write_csv(path, meta_comments("sweep", {{"config_hash", config_hash}}), {"omega", "v_ed", "v_es", "ef"}, out);
}

}  // namespace cardiotwin
