#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cardiotwin/analysis.hpp"
#include "cardiotwin/mlp.hpp"
#include "cardiotwin/synth.hpp"

namespace cardiotwin {

/// Volume surrogate: an Mlp over min-max normalized theta coordinates whose
/// two outputs are (v_ed, v_es) / target_scale.
struct Surrogate {
    Mlp net;
    Theta input_lo{};
    Theta input_hi{};
    double target_scale = 100.0;

    /// Predicted (v_ed, v_es) in ml for a physical theta vector.
    std::array<double, 2> predict_volumes(const Theta& theta) const;

    /// Equivalent network over physical theta inputs: the input normalization
    /// is folded into the first affine layer (exact composition), which lets
    /// the surrogate serve as a frozen tail behind a net that emits physical
    /// parameters. The surrogate's own weights are untouched.
    Mlp physical_input_tail() const;
};

std::string surrogate_to_json(const Surrogate& s, int indent = 1);
Surrogate surrogate_from_json(const std::string& text);
void save_surrogate(const Surrogate& s, const std::string& path);
Surrogate load_surrogate(const std::string& path);

/// Inverse map artifact: the measurement->theta network plus the bounds it
/// was trained against (needed to assemble full parameter sets later).
struct Backbone {
    Mlp net;
    ParamBounds bounds;
};

std::string backbone_to_json(const Backbone& b, int indent = 1);
Backbone backbone_from_json(const std::string& text);
void save_backbone(const Backbone& b, const std::string& path);
Backbone load_backbone(const std::string& path);

struct PretrainOptions {
    std::vector<std::size_t> hidden = {64, 64};
    std::uint64_t init_seed = 11;
    TrainConfig train;           // adam, lr 1e-3, batch 100; epochs set below
    std::size_t eval_n = 1000;   // held-out evaluation draws
    std::uint64_t eval_seed = 202;

    PretrainOptions() {
        train.epochs = 400;
        train.seed = 1;
    }
};

struct PretrainResult {
    Surrogate surrogate;
    std::vector<double> loss_history;
    double eval_ef_mae_pp = 0.0;  // mean |EF_pred - EF_true| in percentage points
    std::size_t eval_count = 0;
};

/// Fit the volume surrogate on a pretext dataset and score it on a fresh
/// held-out evaluation set drawn from the same bounds.
PretrainResult pretrain_surrogate(const PretextDataset& data, const PretrainOptions& options = {},
                                  const SimSettings& sim = {});

struct FinetuneOptions {
    std::vector<std::size_t> hidden = {128, 128};
    std::uint64_t init_seed = 12;
    TrainConfig train;

    FinetuneOptions() {
        train.epochs = 500;
        train.seed = 2;
    }
};

struct FinetuneMetrics {
    double test_ef_mae_pp_surrogate = 0.0;  // EF through the frozen surrogate's volumes
    double test_ef_mae_pp_resim = 0.0;      // EF from re-simulating predicted parameters
    double test_v_ed_mae_ml = 0.0;          // re-simulation path
    double test_v_es_mae_ml = 0.0;
    std::size_t test_count = 0;
};

struct FinetuneResult {
    Backbone backbone;
    std::vector<double> loss_history;
    FinetuneMetrics metrics;
};

/// Train the measurement->theta backbone through the frozen surrogate on the
/// dataset's train split; report test-split fidelity via both the surrogate
/// and the re-simulation paths. The surrogate is never modified.
FinetuneResult finetune_backbone(const FinetuneDataset& data, const Surrogate& surrogate,
                                 const FinetuneOptions& options = {}, const SimSettings& sim = {});

/// Digital twin for one measurement: predicted parameters, their simulation,
/// and the derived observables. Only the backbone is consulted; the
/// surrogate plays no role at prediction time.
struct TwinPrediction {
    Theta theta_hat{};
    PatientParams params;
    Trajectory trajectory;
    PvLoop loop;
    EdEs edes;
    double ef = 0.0;
};

TwinPrediction predict_twin(std::span<const double> y, const Backbone& backbone, const SimSettings& sim = {});

struct TrialRow {
    std::size_t patient_id = 0;
    double ef_baseline = 0.0;
    double ef_lvad = 0.0;
    double delta_ef = 0.0;
};

struct TrialResult {
    std::vector<TrialRow> rows;
    double omega_level = 0.0;
    double mean_ef_baseline = 0.0;
    double mean_ef_lvad = 0.0;
    double mean_delta_ef = 0.0;
    double spearman_baseline_delta = 0.0;  // rank correlation of EF_baseline vs delta
    std::size_t failures = 0;
};

/// Paired in-silico trial: every patient is simulated with and without the
/// pump under identical solver settings. Per-patient failures are skipped
/// and counted; more than 5% aborts the trial.
TrialResult run_lvad_trial(const std::vector<PatientParams>& cohort, const LvadParams& lvad,
                           const SimSettings& sim = {});

struct SweepRow {
    double omega = 0.0;
    bool ok = false;
    EdEs edes;
    double ef = 0.0;
    PvLoop loop;
    std::string error;  // set when ok is false
};

/// Simulate one patient across constant pump speeds (levels sorted
/// ascending). Failed levels are reported in place, not dropped.
std::vector<SweepRow> omega_sweep(const PatientParams& patient, const LvadParams& lvad_base,
                                  std::vector<double> levels, const SimSettings& sim = {});

/// Default sweep grid used for calibration and reporting.
std::vector<double> default_omega_levels();

/// Smallest sweep level that improves the cohort's mean EF with every
/// simulation finite and the pump flow forward through the settled final
/// cycle for every patient (speeds whose head cannot beat the aortic
/// gradient regurgitate during diastole and are not usable operating
/// points). Throws ValidationError if no level qualifies.
double calibrate_omega(const std::vector<PatientParams>& cohort, const LvadParams& lvad_base,
                       const std::vector<double>& levels, const SimSettings& sim = {});

/// Cohort construction: draw pool_n parameter sets, keep the cohort_n with
/// the lowest baseline ejection fraction (the low-EF half by default).
std::vector<PatientParams> low_ef_cohort(std::size_t pool_n, std::size_t cohort_n, const ParamBounds& bounds,
                                         std::uint64_t seed, const SimSettings& sim = {});

// Trial and sweep artifacts.
void write_trial_csv(const TrialResult& trial, const std::string& path, const std::string& config_hash);
void write_sweep_csv(const std::vector<SweepRow>& rows, const std::string& path, const std::string& config_hash);

}  // namespace cardiotwin
