#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cardiotwin/params.hpp"
#include "cardiotwin/solver.hpp"

namespace cardiotwin {

/// Canonical ordering of the per-patient learnable parameters. Every theta
/// vector, dataset column block and network output follows this order.
enum LearnableIndex : std::size_t {
    kRm = 0,
    kRa = 1,
    kEmax = 2,
    kEmin = 3,
    kVd = 4,
    kStartV = 5,
    kTc = 6,
    kLearnableCount = 7,
};

extern const std::array<const char*, kLearnableCount> kLearnableNames;

using Theta = std::array<double, kLearnableCount>;

/// Sampling box for the learnable parameters plus the shared fixed constants
/// used when assembling a full PatientParams from a theta vector.
struct ParamBounds {
    std::array<double, kLearnableCount> lo{0.005, 0.0001, 0.5, 0.02, 4.0, 0.0, 0.4};
    std::array<double, kLearnableCount> hi{0.1, 0.25, 3.5, 0.1, 25.0, 280.0, 1.7};

    double r_c = 0.0398;
    double r_s = 1.0;
    double c_a = 0.08;
    double c_s = 1.33;
    double c_r = 4.4;
    double l_s = 0.0005;
    double start_pao = 75.0;

    static ParamBounds defaults() { return ParamBounds{}; }

    void validate() const;  // lo <= hi, positivity where required

    PatientParams assemble(const Theta& theta) const;
    Theta extract(const PatientParams& p) const;
    bool contains(const Theta& theta) const;

    /// (theta - lo) / (hi - lo), the network-facing coordinates.
    Theta normalize(const Theta& theta) const;
    Theta denormalize(const Theta& unit) const;
};

std::string to_json_string(const ParamBounds& b, int indent = 2);
ParamBounds param_bounds_from_json(const std::string& text);
ParamBounds load_param_bounds(const std::string& path);

enum class SampleMode { uniform, grid };

/// Draw n theta vectors. `uniform` is coordinate-wise uniform in the box;
/// `grid` tensorizes near-equal per-axis level counts whose product reaches
/// n, then truncates (lexicographic, first axis slowest). Both are
/// deterministic for a given (n, bounds, seed).
std::vector<Theta> sample_thetas(std::size_t n, const ParamBounds& bounds, std::uint64_t seed,
                                 SampleMode mode = SampleMode::uniform);

std::vector<PatientParams> sample_params(std::size_t n, const ParamBounds& bounds, std::uint64_t seed,
                                         SampleMode mode = SampleMode::uniform);

/// One supervised example for the volume surrogate: parameters in, final
/// cycle volume extrema out.
struct PretextExample {
    Theta theta{};
    double v_ed = 0.0;
    double v_es = 0.0;
};

struct PretextDataset {
    std::vector<PretextExample> examples;
    ParamBounds bounds;
    std::uint64_t seed = 0;
    SampleMode mode = SampleMode::uniform;
    std::size_t attempted = 0;
    std::size_t failed = 0;  // simulations that blew up and were skipped
};

/// Simulate n sampled parameter sets and record (theta, v_ed, v_es). Blown-up
/// runs are skipped and counted; more than 1% failures aborts, since that
/// signals a mis-specified sampling box rather than bad luck.
PretextDataset generate_pretext_dataset(std::size_t n, const ParamBounds& bounds, std::uint64_t seed,
                                        SampleMode mode = SampleMode::uniform, const SimSettings& sim = {});

/// Frozen random two-layer feature map standing in for an imaging front-end:
/// 32 volume samples -> 48 relu units -> 64 tanh outputs. Materialized once
/// per render_seed; y must depend on the trajectory only through the final
/// cycle's volume curve.
struct RenderOperator {
    static constexpr std::size_t kInput = 32;
    static constexpr std::size_t kHidden = 48;
    static constexpr std::size_t kOutput = 64;

    std::uint64_t render_seed = 0;
    std::vector<double> w1, b1;  // 48x32 row-major, 48
    std::vector<double> w2, b2;  // 64x48 row-major, 64

    static RenderOperator make(std::uint64_t render_seed);

    /// Volume curve of the final cycle, 32 samples uniform in phase,
    /// normalized as (v - 100) / 100.
    static std::array<double, kInput> volume_features(const Trajectory& traj);

    std::array<double, kOutput> apply(const std::array<double, kInput>& v) const;
};

/// y = tanh(W2 relu(W1 v + b1) + b2) + noise, noise ~ N(0, noise_sigma^2)
/// drawn from noise_seed (ignored when noise_sigma == 0).
std::vector<double> render_measurement(const Trajectory& traj, const RenderOperator& op,
                                       double noise_sigma = 0.0, std::uint64_t noise_seed = 0);

struct Measurement {
    std::vector<double> y;  // RenderOperator::kOutput wide
    double v_ed = 0.0;
    double v_es = 0.0;
    Theta theta{};
};

struct FinetuneDataset {
    std::vector<Measurement> measurements;
    ParamBounds bounds;
    std::uint64_t seed = 0;
    std::uint64_t render_seed = 0;
    double noise_sigma = 0.0;
    std::size_t attempted = 0;
    std::size_t failed = 0;

    // 80/10/10 split by index: [0, train), [train, train+val), [train+val, n).
    std::size_t n_train() const { return measurements.size() * 8 / 10; }
    std::size_t n_val() const { return measurements.size() / 10; }
    std::size_t n_test() const { return measurements.size() - n_train() - n_val(); }
};

FinetuneDataset generate_finetune_dataset(std::size_t n, const ParamBounds& bounds, std::uint64_t seed,
                                          std::uint64_t render_seed, double noise_sigma = 0.0,
                                          const SimSettings& sim = {});

// Dataset artifacts: CSV with a JSON sidecar carrying bounds, seeds, sizes
// and the producing config hash.
void write_pretext_csv(const PretextDataset& data, const std::string& csv_path, const std::string& sidecar_path);
PretextDataset read_pretext_csv(const std::string& csv_path, const std::string& sidecar_path);
void write_finetune_csv(const FinetuneDataset& data, const std::string& csv_path, const std::string& sidecar_path);
FinetuneDataset read_finetune_csv(const std::string& csv_path, const std::string& sidecar_path);

}  // namespace cardiotwin
