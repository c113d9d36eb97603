// Command-line front end: simulation, dataset generation, surrogate
// training, twin prediction, pump trials, parameter read-back, and the
// release verification suite. Every artifact embeds the seeds and a hash of
// the configuration that produced it.

#include <cstdio>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cardiotwin/acceptance.hpp"
#include "cardiotwin/analysis.hpp"
#include "cardiotwin/csv.hpp"
#include "cardiotwin/errors.hpp"
#include "cardiotwin/identify.hpp"
#include "cardiotwin/pipeline.hpp"
#include "cardiotwin/solver.hpp"
#include "cardiotwin/svg.hpp"
#include "cardiotwin/synth.hpp"
#include "cardiotwin/traj_io.hpp"

namespace {

using cardiotwin::ParamBounds;
using cardiotwin::PatientParams;
using cardiotwin::SimSettings;
using nlohmann::json;

std::string hash_of(const json& effective_config) {
    return cardiotwin::config_hash_hex(effective_config.dump());
}

void write_text(const std::string& path, const std::string& body) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw cardiotwin::FileError("cannot open for writing: " + path);
    f << body;
    if (!f) throw cardiotwin::FileError("write failed: " + path);
}

void write_loss_csv(const std::string& path, const std::vector<double>& history, const std::string& tool,
                    const std::map<std::string, std::string>& meta) {
    std::vector<std::vector<double>> rows;
    rows.reserve(history.size());
    for (std::size_t i = 0; i < history.size(); ++i) {
        rows.push_back({static_cast<double>(i), history[i]});
    }
    cardiotwin::write_csv(path, cardiotwin::meta_comments(tool, meta), {"epoch", "loss"}, rows);
}

ParamBounds bounds_from_option(const std::string& path) {
    return path.empty() ? ParamBounds::defaults() : cardiotwin::load_param_bounds(path);
}

json theta_json(const cardiotwin::Theta& theta) {
    json j;
    for (std::size_t i = 0; i < cardiotwin::kLearnableCount; ++i) {
        j[cardiotwin::kLearnableNames[i]] = theta[i];
    }
    return j;
}

// ------------------------------------------------------------- simulate

struct SimulateOptions {
    std::string params_path;
    std::string lvad_path;
    double omega = -1.0;  // < 0: no override
    std::size_t cycles = 3;
    std::size_t steps_per_cycle = 2000;
    std::string out_prefix = "simulate";
};

void run_simulate(const SimulateOptions& o) {
    const PatientParams params =
        o.params_path.empty() ? PatientParams::reference() : cardiotwin::load_patient_params(o.params_path);

    std::optional<cardiotwin::LvadParams> lvad;
    if (!o.lvad_path.empty()) lvad = cardiotwin::load_lvad_params(o.lvad_path);
    if (o.omega >= 0.0) {
        if (!lvad) lvad = cardiotwin::LvadParams::reference();
        lvad->omega_schedule = cardiotwin::OmegaSchedule::constant(o.omega);
    }

    const SimSettings sim{o.cycles, o.steps_per_cycle};
    const cardiotwin::Trajectory traj = cardiotwin::simulate_cycles(params, lvad, sim);
    const cardiotwin::PvLoop loop = cardiotwin::pv_loop(traj);
    const cardiotwin::EdEs edes = cardiotwin::ed_es_volumes(traj);
    const double ef = cardiotwin::ejection_fraction(edes);

    cardiotwin::write_trajectory_csv(o.out_prefix + "_trajectory.csv", traj, "simulate");
    cardiotwin::write_pv_loop_csv(o.out_prefix + "_pv.csv", loop, "simulate");
    cardiotwin::write_pv_loops_svg(o.out_prefix + "_pv.svg", {loop}, {lvad ? "assisted" : "baseline"},
                                   "Pressure-volume loop");

    std::printf("EF %.4f  V_ED %.2f ml  V_ES %.2f ml  (%zu cycles, %zu samples)\n", ef, edes.v_ed,
                edes.v_es, o.cycles, traj.size());
    std::printf("wrote %s_trajectory.csv, %s_pv.csv, %s_pv.svg\n", o.out_prefix.c_str(),
                o.out_prefix.c_str(), o.out_prefix.c_str());
}

// ------------------------------------------------- dataset generation

struct GenPretextOptions {
    std::size_t n = 3840;
    std::uint64_t seed = 101;
    std::string mode = "uniform";
    std::string bounds_path;
    std::string out_prefix = "pretext";
};

void run_gen_pretext(const GenPretextOptions& o) {
    const ParamBounds bounds = bounds_from_option(o.bounds_path);
    const auto mode = o.mode == "grid" ? cardiotwin::SampleMode::grid : cardiotwin::SampleMode::uniform;
    const cardiotwin::PretextDataset data = cardiotwin::generate_pretext_dataset(o.n, bounds, o.seed, mode);
    cardiotwin::write_pretext_csv(data, o.out_prefix + ".csv", o.out_prefix + ".json");
    std::printf("wrote %zu examples (%zu/%zu attempts failed) to %s.csv\n", data.examples.size(),
                data.failed, data.attempted, o.out_prefix.c_str());
}

struct GenFinetuneOptions {
    std::size_t n = 1000;
    std::uint64_t seed = 303;
    std::uint64_t render_seed = 404;
    double noise_sigma = 0.0;
    std::string bounds_path;
    std::string out_prefix = "finetune";
};

void run_gen_finetune(const GenFinetuneOptions& o) {
    const ParamBounds bounds = bounds_from_option(o.bounds_path);
    const cardiotwin::FinetuneDataset data =
        cardiotwin::generate_finetune_dataset(o.n, bounds, o.seed, o.render_seed, o.noise_sigma);
    cardiotwin::write_finetune_csv(data, o.out_prefix + ".csv", o.out_prefix + ".json");
    std::printf("wrote %zu measurements (%zu/%zu attempts failed) to %s.csv; split %zu/%zu/%zu\n",
                data.measurements.size(), data.failed, data.attempted, o.out_prefix.c_str(),
                data.n_train(), data.n_val(), data.n_test());
}

// ------------------------------------------------------------- training

struct PretrainOptionsCli {
    std::string data_prefix = "pretext";
    std::vector<std::size_t> hidden = {64, 64};
    std::size_t epochs = 400;
    std::size_t batch = 100;
    double lr = 1e-3;
    std::uint64_t train_seed = 1;
    std::uint64_t init_seed = 11;
    std::size_t eval_n = 1000;
    std::uint64_t eval_seed = 202;
    std::string out = "surrogate.json";
    std::string metrics = "pretrain_metrics.json";
    std::string loss_csv = "pretrain_loss.csv";
};

void run_pretrain(const PretrainOptionsCli& o) {
    const cardiotwin::PretextDataset data =
        cardiotwin::read_pretext_csv(o.data_prefix + ".csv", o.data_prefix + ".json");

    cardiotwin::PretrainOptions opt;
    opt.hidden = o.hidden;
    opt.init_seed = o.init_seed;
    opt.train.epochs = o.epochs;
    opt.train.batch_size = o.batch;
    opt.train.learning_rate = o.lr;
    opt.train.seed = o.train_seed;
    opt.eval_n = o.eval_n;
    opt.eval_seed = o.eval_seed;

    const cardiotwin::PretrainResult result = cardiotwin::pretrain_surrogate(data, opt);
    cardiotwin::save_surrogate(result.surrogate, o.out);

    const json cfg = {{"data", o.data_prefix}, {"hidden", o.hidden},         {"epochs", o.epochs},
                      {"batch", o.batch},      {"lr", o.lr},                 {"train_seed", o.train_seed},
                      {"init_seed", o.init_seed}, {"eval_n", o.eval_n},      {"eval_seed", o.eval_seed}};
    const std::string hash = hash_of(cfg);

    json metrics = {{"eval_ef_mae_pp", result.eval_ef_mae_pp},
                    {"eval_count", result.eval_count},
                    {"final_train_loss", result.loss_history.empty() ? 0.0 : result.loss_history.back()},
                    {"epochs", o.epochs},
                    {"dataset_seed", data.seed},
                    {"train_seed", o.train_seed},
                    {"init_seed", o.init_seed},
                    {"eval_seed", o.eval_seed},
                    {"config_hash", hash}};
    write_text(o.metrics, metrics.dump(2) + "\n");
    write_loss_csv(o.loss_csv, result.loss_history, "pretrain",
                   {{"config_hash", hash}, {"train_seed", std::to_string(o.train_seed)}});

    std::printf("eval EF MAE %.3f pp over %zu draws; wrote %s, %s, %s\n", result.eval_ef_mae_pp,
                result.eval_count, o.out.c_str(), o.metrics.c_str(), o.loss_csv.c_str());
}

struct FinetuneOptionsCli {
    std::string data_prefix = "finetune";
    std::string surrogate = "surrogate.json";
    std::vector<std::size_t> hidden = {128, 128};
    std::size_t epochs = 500;
    std::size_t batch = 100;
    double lr = 1e-3;
    std::uint64_t train_seed = 2;
    std::uint64_t init_seed = 12;
    std::string out = "backbone.json";
    std::string metrics = "finetune_metrics.json";
    std::string loss_csv = "finetune_loss.csv";
};

void run_finetune(const FinetuneOptionsCli& o) {
    const cardiotwin::FinetuneDataset data =
        cardiotwin::read_finetune_csv(o.data_prefix + ".csv", o.data_prefix + ".json");
    const cardiotwin::Surrogate surrogate = cardiotwin::load_surrogate(o.surrogate);

    cardiotwin::FinetuneOptions opt;
    opt.hidden = o.hidden;
    opt.init_seed = o.init_seed;
    opt.train.epochs = o.epochs;
    opt.train.batch_size = o.batch;
    opt.train.learning_rate = o.lr;
    opt.train.seed = o.train_seed;

    const cardiotwin::FinetuneResult result = cardiotwin::finetune_backbone(data, surrogate, opt);
    cardiotwin::save_backbone(result.backbone, o.out);

    const json cfg = {{"data", o.data_prefix}, {"surrogate", o.surrogate}, {"hidden", o.hidden},
                      {"epochs", o.epochs},    {"batch", o.batch},         {"lr", o.lr},
                      {"train_seed", o.train_seed}, {"init_seed", o.init_seed}};
    const std::string hash = hash_of(cfg);

    const cardiotwin::FinetuneMetrics& m = result.metrics;
    json metrics = {{"test_ef_mae_pp_surrogate", m.test_ef_mae_pp_surrogate},
                    {"test_ef_mae_pp_resim", m.test_ef_mae_pp_resim},
                    {"test_v_ed_mae_ml", m.test_v_ed_mae_ml},
                    {"test_v_es_mae_ml", m.test_v_es_mae_ml},
                    {"test_count", m.test_count},
                    {"dataset_seed", data.seed},
                    {"render_seed", data.render_seed},
                    {"train_seed", o.train_seed},
                    {"init_seed", o.init_seed},
                    {"config_hash", hash}};
    write_text(o.metrics, metrics.dump(2) + "\n");
    write_loss_csv(o.loss_csv, result.loss_history, "finetune",
                   {{"config_hash", hash}, {"train_seed", std::to_string(o.train_seed)}});

    std::printf("test EF MAE %.3f pp (surrogate path %.3f), V_ED MAE %.2f ml, V_ES MAE %.2f ml\n",
                m.test_ef_mae_pp_resim, m.test_ef_mae_pp_surrogate, m.test_v_ed_mae_ml, m.test_v_es_mae_ml);
    std::printf("wrote %s, %s, %s\n", o.out.c_str(), o.metrics.c_str(), o.loss_csv.c_str());
}

// -------------------------------------------------------------- predict

struct PredictOptions {
    std::string backbone = "backbone.json";
    std::string data_prefix = "finetune";
    std::size_t row = 0;
    std::string out = "twin.json";
    std::string svg = "twin_pv.svg";
};

void run_predict(const PredictOptions& o) {
    const cardiotwin::Backbone backbone = cardiotwin::load_backbone(o.backbone);
    const cardiotwin::FinetuneDataset data =
        cardiotwin::read_finetune_csv(o.data_prefix + ".csv", o.data_prefix + ".json");
    if (o.row >= data.measurements.size()) {
        throw cardiotwin::ValidationError("predict: row " + std::to_string(o.row) + " out of range (" +
                                          std::to_string(data.measurements.size()) + " rows)");
    }
    const cardiotwin::Measurement& m = data.measurements[o.row];
    const cardiotwin::TwinPrediction twin = cardiotwin::predict_twin(m.y, backbone);

    const json cfg = {{"backbone", o.backbone}, {"data", o.data_prefix}, {"row", o.row}};
    json out = {{"row", o.row},
                {"theta_hat", theta_json(twin.theta_hat)},
                {"ef", twin.ef},
                {"v_ed", twin.edes.v_ed},
                {"v_es", twin.edes.v_es},
                {"truth",
                 {{"theta", theta_json(m.theta)},
                  {"v_ed", m.v_ed},
                  {"v_es", m.v_es},
                  {"ef", cardiotwin::ef_from_volumes(m.v_ed, m.v_es)}}},
                {"config_hash", hash_of(cfg)}};
    write_text(o.out, out.dump(2) + "\n");
    cardiotwin::write_pv_loops_svg(o.svg, {twin.loop}, {"predicted twin"}, "Predicted pressure-volume loop");

    std::printf("row %zu: predicted EF %.4f (label EF %.4f); wrote %s, %s\n", o.row, twin.ef,
                cardiotwin::ef_from_volumes(m.v_ed, m.v_es), o.out.c_str(), o.svg.c_str());
}

// ------------------------------------------------------- trial / sweep

struct TrialOptions {
    std::size_t pool = 400;
    std::size_t cohort = 100;
    std::uint64_t seed = 505;
    double omega = -1.0;  // < 0: calibrate from the sweep grid
    std::vector<double> levels;
    std::string out_csv = "trial.csv";
    std::string summary = "trial_summary.json";
};

void run_trial(const TrialOptions& o) {
    const ParamBounds bounds = ParamBounds::defaults();
    const std::vector<PatientParams> cohort =
        cardiotwin::low_ef_cohort(o.pool, o.cohort, bounds, o.seed);

    cardiotwin::LvadParams lvad = cardiotwin::LvadParams::reference();
    const std::vector<double> levels = o.levels.empty() ? cardiotwin::default_omega_levels() : o.levels;
    const double omega = o.omega >= 0.0 ? o.omega : cardiotwin::calibrate_omega(cohort, lvad, levels);
    lvad.omega_schedule = cardiotwin::OmegaSchedule::constant(omega);

    const cardiotwin::TrialResult trial = cardiotwin::run_lvad_trial(cohort, lvad);

    const json cfg = {{"pool", o.pool}, {"cohort", o.cohort}, {"seed", o.seed}, {"omega", omega}};
    const std::string hash = hash_of(cfg);
    cardiotwin::write_trial_csv(trial, o.out_csv, hash);

    json summary = {{"omega", omega},
                    {"calibrated", o.omega < 0.0},
                    {"cohort", cohort.size()},
                    {"seed", o.seed},
                    {"mean_ef_baseline", trial.mean_ef_baseline},
                    {"mean_ef_lvad", trial.mean_ef_lvad},
                    {"mean_delta_ef", trial.mean_delta_ef},
                    {"spearman_baseline_delta", trial.spearman_baseline_delta},
                    {"failures", trial.failures},
                    {"config_hash", hash}};
    write_text(o.summary, summary.dump(2) + "\n");

    std::printf("omega %.0f: mean EF %.4f -> %.4f (dEF %+.4f), spearman %.3f, failures %zu/%zu\n", omega,
                trial.mean_ef_baseline, trial.mean_ef_lvad, trial.mean_delta_ef,
                trial.spearman_baseline_delta, trial.failures, cohort.size());
    std::printf("wrote %s, %s\n", o.out_csv.c_str(), o.summary.c_str());
}

struct SweepOptions {
    std::string params_path;
    std::vector<double> levels;
    std::string out_csv = "sweep.csv";
    std::string summary = "sweep_summary.json";
    std::string svg = "sweep_pv.svg";
};

void run_sweep(const SweepOptions& o) {
    const PatientParams params =
        o.params_path.empty() ? PatientParams::reference() : cardiotwin::load_patient_params(o.params_path);
    const cardiotwin::LvadParams lvad = cardiotwin::LvadParams::reference();
    const std::vector<double> levels = o.levels.empty() ? cardiotwin::default_omega_levels() : o.levels;

    const std::vector<cardiotwin::SweepRow> rows = cardiotwin::omega_sweep(params, lvad, levels);

    const json cfg = {{"params", o.params_path.empty() ? "reference" : o.params_path}, {"levels", levels}};
    const std::string hash = hash_of(cfg);
    cardiotwin::write_sweep_csv(rows, o.out_csv, hash);

    json rows_json = json::array();
    std::vector<cardiotwin::PvLoop> loops;
    std::vector<std::string> labels;
    for (const auto& row : rows) {
        json r = {{"omega", row.omega}, {"ok", row.ok}};
        if (row.ok) {
            r["ef"] = row.ef;
            r["v_ed"] = row.edes.v_ed;
            r["v_es"] = row.edes.v_es;
            loops.push_back(row.loop);
            char label[32];
            std::snprintf(label, sizeof(label), "omega %.0f", row.omega);
            labels.emplace_back(label);
        } else {
            r["error"] = row.error;
        }
        rows_json.push_back(r);
    }
    json summary = {{"levels", rows_json}, {"config_hash", hash}};
    write_text(o.summary, summary.dump(2) + "\n");
    if (!loops.empty()) {
        cardiotwin::write_pv_loops_svg(o.svg, loops, labels, "Pump speed sweep");
    }

    std::printf("swept %zu levels (%zu simulated); wrote %s, %s%s\n", rows.size(), loops.size(),
                o.out_csv.c_str(), o.summary.c_str(), loops.empty() ? "" : (", " + o.svg).c_str());
}

// ------------------------------------------------------------- identify

struct IdentifyOptions {
    std::string trajectory;
    std::string truth_path;
    std::string out = "recovered.json";
};

void run_identify(const IdentifyOptions& o) {
    const cardiotwin::StateSeries series = cardiotwin::read_trajectory_csv(o.trajectory);

    std::optional<PatientParams> truth;
    if (!o.truth_path.empty()) truth = cardiotwin::load_patient_params(o.truth_path);

    const cardiotwin::RecoveredParams rec = cardiotwin::recover_all(
        series.states, series.dim, series.dt, series.p_lv, series.v_lv, truth ? &*truth : nullptr);
    write_text(o.out, cardiotwin::recovered_to_json(rec) + "\n");

    double worst_residual = 0.0;
    for (double r : rec.statics.row_rel_residual) worst_residual = std::max(worst_residual, r);
    std::printf("recovered e_max %.4f e_min %.4f v_d %.3f t_c %.5f; max row residual %.2e; wrote %s\n",
                rec.elastance.e_max, rec.elastance.e_min, rec.elastance.v_d, rec.elastance.t_c,
                worst_residual, o.out.c_str());
}

// --------------------------------------------------------------- verify

struct VerifyOptions {
    std::string json_out;
};

int run_verify(const VerifyOptions& o) {
    const cardiotwin::AcceptanceReport report =
        cardiotwin::run_acceptance_suite([](const cardiotwin::CriterionResult& r) {
            std::printf("%s  %d %s: %s\n", r.passed ? "PASS" : "FAIL", r.number, r.name.c_str(),
                        r.detail.c_str());
            std::fflush(stdout);
        });
    if (!o.json_out.empty()) {
        write_text(o.json_out, cardiotwin::acceptance_to_json(report) + "\n");
    }
    std::printf("%s\n", report.all_passed() ? "all criteria passed" : "criteria failed");
    return report.all_passed() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"cardiotwin: cardiovascular digital-twin simulation and inversion toolkit"};
    app.require_subcommand(1);
    int exit_code = 0;

    SimulateOptions sim_opts;
    auto* sim_cmd = app.add_subcommand("simulate", "Run the circulation model and emit trajectory/PV artifacts");
    sim_cmd->add_option("--params", sim_opts.params_path, "Patient parameter JSON (default: reference)");
    sim_cmd->add_option("--lvad", sim_opts.lvad_path, "Pump parameter JSON (default: no pump)");
    sim_cmd->add_option("--omega", sim_opts.omega, "Constant pump speed; implies the reference pump");
    sim_cmd->add_option("--cycles", sim_opts.cycles, "Heartbeats to simulate")->capture_default_str();
    sim_cmd->add_option("--steps-per-cycle", sim_opts.steps_per_cycle, "Grid steps per heartbeat")
        ->capture_default_str();
    sim_cmd->add_option("--out-prefix", sim_opts.out_prefix, "Artifact path prefix")->capture_default_str();
    sim_cmd->callback([&] { run_simulate(sim_opts); });

    GenPretextOptions gp_opts;
    auto* gp_cmd = app.add_subcommand("gen-pretext", "Generate the parameters->volumes pretext dataset");
    gp_cmd->add_option("--n", gp_opts.n, "Examples to generate")->capture_default_str();
    gp_cmd->add_option("--seed", gp_opts.seed, "Sampling seed")->capture_default_str();
    gp_cmd->add_option("--mode", gp_opts.mode, "Sampling mode")
        ->check(CLI::IsMember({"uniform", "grid"}))
        ->capture_default_str();
    gp_cmd->add_option("--bounds", gp_opts.bounds_path, "Bounds JSON (default: built-in box)");
    gp_cmd->add_option("--out-prefix", gp_opts.out_prefix, "Artifact path prefix")->capture_default_str();
    gp_cmd->callback([&] { run_gen_pretext(gp_opts); });

    GenFinetuneOptions gf_opts;
    auto* gf_cmd = app.add_subcommand("gen-finetune", "Generate the measurements->parameters dataset");
    gf_cmd->add_option("--n", gf_opts.n, "Measurements to generate")->capture_default_str();
    gf_cmd->add_option("--seed", gf_opts.seed, "Sampling seed")->capture_default_str();
    gf_cmd->add_option("--render-seed", gf_opts.render_seed, "Measurement operator seed")->capture_default_str();
    gf_cmd->add_option("--noise-sigma", gf_opts.noise_sigma, "Measurement noise std")->capture_default_str();
    gf_cmd->add_option("--bounds", gf_opts.bounds_path, "Bounds JSON (default: built-in box)");
    gf_cmd->add_option("--out-prefix", gf_opts.out_prefix, "Artifact path prefix")->capture_default_str();
    gf_cmd->callback([&] { run_gen_finetune(gf_opts); });

    PretrainOptionsCli pt_opts;
    auto* pt_cmd = app.add_subcommand("pretrain", "Fit the volume surrogate on a pretext dataset");
    pt_cmd->add_option("--data-prefix", pt_opts.data_prefix, "Dataset prefix (.csv/.json)")->capture_default_str();
    pt_cmd->add_option("--hidden", pt_opts.hidden, "Hidden layer widths")->capture_default_str();
    pt_cmd->add_option("--epochs", pt_opts.epochs, "Training epochs")->capture_default_str();
    pt_cmd->add_option("--batch", pt_opts.batch, "Minibatch size")->capture_default_str();
    pt_cmd->add_option("--lr", pt_opts.lr, "Learning rate")->capture_default_str();
    pt_cmd->add_option("--train-seed", pt_opts.train_seed, "Shuffle seed")->capture_default_str();
    pt_cmd->add_option("--init-seed", pt_opts.init_seed, "Weight init seed")->capture_default_str();
    pt_cmd->add_option("--eval-n", pt_opts.eval_n, "Held-out evaluation draws")->capture_default_str();
    pt_cmd->add_option("--eval-seed", pt_opts.eval_seed, "Evaluation sampling seed")->capture_default_str();
    pt_cmd->add_option("--out", pt_opts.out, "Surrogate checkpoint path")->capture_default_str();
    pt_cmd->add_option("--metrics", pt_opts.metrics, "Metrics JSON path")->capture_default_str();
    pt_cmd->add_option("--loss-csv", pt_opts.loss_csv, "Loss history CSV path")->capture_default_str();
    pt_cmd->callback([&] { run_pretrain(pt_opts); });

    FinetuneOptionsCli ft_opts;
    auto* ft_cmd = app.add_subcommand("finetune", "Fit the measurement->parameters backbone through the frozen surrogate");
    ft_cmd->add_option("--data-prefix", ft_opts.data_prefix, "Dataset prefix (.csv/.json)")->capture_default_str();
    ft_cmd->add_option("--surrogate", ft_opts.surrogate, "Surrogate checkpoint path")->capture_default_str();
    ft_cmd->add_option("--hidden", ft_opts.hidden, "Hidden layer widths")->capture_default_str();
    ft_cmd->add_option("--epochs", ft_opts.epochs, "Training epochs")->capture_default_str();
    ft_cmd->add_option("--batch", ft_opts.batch, "Minibatch size")->capture_default_str();
    ft_cmd->add_option("--lr", ft_opts.lr, "Learning rate")->capture_default_str();
    ft_cmd->add_option("--train-seed", ft_opts.train_seed, "Shuffle seed")->capture_default_str();
    ft_cmd->add_option("--init-seed", ft_opts.init_seed, "Weight init seed")->capture_default_str();
    ft_cmd->add_option("--out", ft_opts.out, "Backbone checkpoint path")->capture_default_str();
    ft_cmd->add_option("--metrics", ft_opts.metrics, "Metrics JSON path")->capture_default_str();
    ft_cmd->add_option("--loss-csv", ft_opts.loss_csv, "Loss history CSV path")->capture_default_str();
    ft_cmd->callback([&] { run_finetune(ft_opts); });

    PredictOptions pr_opts;
    auto* pr_cmd = app.add_subcommand("predict", "Instantiate a digital twin from one measurement row");
    pr_cmd->add_option("--backbone", pr_opts.backbone, "Backbone checkpoint path")->capture_default_str();
    pr_cmd->add_option("--data-prefix", pr_opts.data_prefix, "Measurement dataset prefix")->capture_default_str();
    pr_cmd->add_option("--row", pr_opts.row, "Measurement row index")->capture_default_str();
    pr_cmd->add_option("--out", pr_opts.out, "Prediction JSON path")->capture_default_str();
    pr_cmd->add_option("--svg", pr_opts.svg, "PV-loop SVG path")->capture_default_str();
    pr_cmd->callback([&] { run_predict(pr_opts); });

    TrialOptions tr_opts;
    auto* tr_cmd = app.add_subcommand("trial", "Paired pump trial over a synthetic low-EF cohort");
    tr_cmd->add_option("--pool", tr_opts.pool, "Candidate pool size")->capture_default_str();
    tr_cmd->add_option("--cohort", tr_opts.cohort, "Cohort size (lowest baseline EF)")->capture_default_str();
    tr_cmd->add_option("--seed", tr_opts.seed, "Cohort sampling seed")->capture_default_str();
    tr_cmd->add_option("--omega", tr_opts.omega, "Pump speed (default: calibrate over --levels)");
    tr_cmd->add_option("--levels", tr_opts.levels, "Calibration speed grid (default: built-in)");
    tr_cmd->add_option("--out-csv", tr_opts.out_csv, "Per-patient CSV path")->capture_default_str();
    tr_cmd->add_option("--summary", tr_opts.summary, "Summary JSON path")->capture_default_str();
    tr_cmd->callback([&] { run_trial(tr_opts); });

    SweepOptions sw_opts;
    auto* sw_cmd = app.add_subcommand("sweep", "Simulate one patient across pump speeds");
    sw_cmd->add_option("--params", sw_opts.params_path, "Patient parameter JSON (default: reference)");
    sw_cmd->add_option("--levels", sw_opts.levels, "Speed levels (default: built-in grid)");
    sw_cmd->add_option("--out-csv", sw_opts.out_csv, "Sweep CSV path")->capture_default_str();
    sw_cmd->add_option("--summary", sw_opts.summary, "Summary JSON path")->capture_default_str();
    sw_cmd->add_option("--svg", sw_opts.svg, "PV-loop overlay SVG path")->capture_default_str();
    sw_cmd->callback([&] { run_sweep(sw_opts); });

    IdentifyOptions id_opts;
    auto* id_cmd = app.add_subcommand("identify", "Recover model parameters from a trajectory CSV");
    id_cmd->add_option("--trajectory", id_opts.trajectory, "Trajectory CSV path")->required();
    id_cmd->add_option("--truth", id_opts.truth_path, "Ground-truth params JSON for error reporting");
    id_cmd->add_option("--out", id_opts.out, "Recovered parameters JSON path")->capture_default_str();
    id_cmd->callback([&] { run_identify(id_opts); });

    VerifyOptions vf_opts;
    auto* vf_cmd = app.add_subcommand("verify", "Run the full release verification suite");
    vf_cmd->add_option("--json", vf_opts.json_out, "Also write the report as JSON");
    vf_cmd->callback([&] { exit_code = run_verify(vf_opts); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        // One line on stderr so scripted callers can pattern-match failures.
        std::fprintf(stderr, "error: %s\n", e.what());
        return e.get_exit_code() == 0 ? 1 : e.get_exit_code();
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return exit_code;
}
