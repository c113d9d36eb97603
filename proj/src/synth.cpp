#include "cardiotwin/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "cardiotwin/analysis.hpp"
#include "cardiotwin/csv.hpp"
#include "cardiotwin/errors.hpp"
#include "cardiotwin/rng.hpp"

namespace cardiotwin {

using nlohmann::json;

const std::array<const char*, kLearnableCount> kLearnableNames = {
    "r_m", "r_a", "e_max", "e_min", "v_d", "start_v", "t_c",
};

void ParamBounds::validate() const {
    for (std::size_t i = 0; i < kLearnableCount; ++i) {
        if (!std::isfinite(lo[i]) || !std::isfinite(hi[i]) || lo[i] > hi[i]) {
            throw ValidationError(std::string("bounds: lo > hi or non-finite for ") + kLearnableNames[i]);
        }
        if (lo[i] < 0.0) {
            throw ValidationError(std::string("bounds: negative lower bound for ") + kLearnableNames[i]);
        }
    }
    PatientParams probe = assemble(Theta{lo[kRm], lo[kRa], hi[kEmax], lo[kEmin], lo[kVd], lo[kStartV], lo[kTc]});
    probe.validate();  // fixed constants must themselves be physical
}

PatientParams ParamBounds::assemble(const Theta& theta) const {
    PatientParams p;
    p.r_m = theta[kRm];
    p.r_a = theta[kRa];
    p.e_max = theta[kEmax];
    p.e_min = theta[kEmin];
    p.v_d = theta[kVd];
    p.start_v = theta[kStartV];
    p.t_c = theta[kTc];
    p.r_c = r_c;
    p.r_s = r_s;
    p.c_a = c_a;
    p.c_s = c_s;
    p.c_r = c_r;
    p.l_s = l_s;
    p.start_pao = start_pao;
    return p;
}

Theta ParamBounds::extract(const PatientParams& p) const {
    return Theta{p.r_m, p.r_a, p.e_max, p.e_min, p.v_d, p.start_v, p.t_c};
}

bool ParamBounds::contains(const Theta& theta) const {
    for (std::size_t i = 0; i < kLearnableCount; ++i) {
        if (theta[i] < lo[i] || theta[i] > hi[i]) return false;
    }
    return true;
}

Theta ParamBounds::normalize(const Theta& theta) const {
    Theta u{};
    for (std::size_t i = 0; i < kLearnableCount; ++i) {
        const double span = hi[i] - lo[i];
        u[i] = span == 0.0 ? 0.0 : (theta[i] - lo[i]) / span;
    }
    return u;
}

Theta ParamBounds::denormalize(const Theta& unit) const {
    Theta t{};
    for (std::size_t i = 0; i < kLearnableCount; ++i) t[i] = lo[i] + unit[i] * (hi[i] - lo[i]);
    return t;
}

std::string to_json_string(const ParamBounds& b, int indent) {
    json learnable = json::object();
    for (std::size_t i = 0; i < kLearnableCount; ++i) {
        learnable[kLearnableNames[i]] = json::array({b.lo[i], b.hi[i]});
    }
    const json j{
        {"learnable", learnable},
        {"fixed",
         {{"r_c", b.r_c},
          {"r_s", b.r_s},
          {"c_a", b.c_a},
          {"c_s", b.c_s},
          {"c_r", b.c_r},
          {"l_s", b.l_s},
          {"start_pao", b.start_pao}}},
    };
    return j.dump(indent);
}

namespace {

ParamBounds bounds_from_json_obj(const json& j) {
    if (!j.is_object()) throw ValidationError("bounds: expected a JSON object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (it.key() != "learnable" && it.key() != "fixed") {
            throw ValidationError("bounds: unknown key '" + it.key() + "'");
        }
    }
    ParamBounds b;
    if (j.contains("learnable")) {
        const json& l = j.at("learnable");
        for (auto it = l.begin(); it != l.end(); ++it) {
            bool known = false;
            for (std::size_t i = 0; i < kLearnableCount; ++i) {
                if (it.key() == kLearnableNames[i]) {
                    const json& pair = it.value();
                    if (!pair.is_array() || pair.size() != 2) {
                        throw ValidationError("bounds: '" + it.key() + "' must be [lo, hi]");
                    }
                    b.lo[i] = pair.at(0).get<double>();
                    b.hi[i] = pair.at(1).get<double>();
                    known = true;
                    break;
                }
            }
            if (!known) throw ValidationError("bounds: unknown learnable '" + it.key() + "'");
        }
    }
    if (j.contains("fixed")) {
        const json& f = j.at("fixed");
        for (auto it = f.begin(); it != f.end(); ++it) {
            const std::string& k = it.key();
            const double v = it.value().get<double>();
            if (k == "r_c") b.r_c = v;
            else if (k == "r_s") b.r_s = v;
            else if (k == "c_a") b.c_a = v;
            else if (k == "c_s") b.c_s = v;
            else if (k == "c_r") b.c_r = v;
            else if (k == "l_s") b.l_s = v;
            else if (k == "start_pao") b.start_pao = v;
            else throw ValidationError("bounds: unknown fixed constant '" + k + "'");
        }
    }
    b.validate();
    return b;
}

}  // namespace

ParamBounds param_bounds_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ValidationError(std::string("bounds: malformed JSON: ") + e.what());
    }
    return bounds_from_json_obj(j);
}

ParamBounds load_param_bounds(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FileError("cannot open bounds file: " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return param_bounds_from_json(text);
}

namespace {

std::vector<Theta> grid_thetas(std::size_t n, const ParamBounds& bounds) {
    // Near-equal per-axis level counts with product >= n: start at the
    // largest uniform count k with k^d <= n, then bump leading axes to k+1.
    std::array<std::size_t, kLearnableCount> counts;
    std::size_t k = 1;
    auto pow_all = [](std::size_t base, std::size_t exp) {
        std::size_t r = 1;
        for (std::size_t i = 0; i < exp; ++i) r *= base;
        return r;
    };
    while (pow_all(k + 1, kLearnableCount) <= n) ++k;
    counts.fill(k);
    std::size_t product = pow_all(k, kLearnableCount);
    for (std::size_t axis = 0; axis < kLearnableCount && product < n; ++axis) {
        product = product / counts[axis] * (counts[axis] + 1);
        ++counts[axis];
    }

    std::vector<Theta> out;
    out.reserve(n);
    std::array<std::size_t, kLearnableCount> idx{};
    for (std::size_t flat = 0; flat < product && out.size() < n; ++flat) {
        Theta t{};
        for (std::size_t a = 0; a < kLearnableCount; ++a) {
            const std::size_t c = counts[a];
            // The two-sided form lands on the box faces exactly; the one-sided
            // lo + frac * (hi - lo) can miss hi by one ulp.
            const double frac = c == 1 ? 0.5 : static_cast<double>(idx[a]) / static_cast<double>(c - 1);
            t[a] = bounds.lo[a] * (1.0 - frac) + bounds.hi[a] * frac;
        }
        out.push_back(t);
        // lexicographic increment, last axis fastest
        for (std::size_t a = kLearnableCount; a-- > 0;) {
            if (++idx[a] < counts[a]) break;
            idx[a] = 0;
        }
    }
    return out;
}

}  // namespace

std::vector<Theta> sample_thetas(std::size_t n, const ParamBounds& bounds, std::uint64_t seed, SampleMode mode) {
    bounds.validate();
    if (mode == SampleMode::grid) return grid_thetas(n, bounds);

    Rng rng(seed);
    std::vector<Theta> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        Theta t{};
        for (std::size_t a = 0; a < kLearnableCount; ++a) t[a] = rng.uniform(bounds.lo[a], bounds.hi[a]);
        out.push_back(t);
    }
    return out;
}

std::vector<PatientParams> sample_params(std::size_t n, const ParamBounds& bounds, std::uint64_t seed,
                                         SampleMode mode) {
    std::vector<PatientParams> out;
    out.reserve(n);
    for (const Theta& t : sample_thetas(n, bounds, seed, mode)) out.push_back(bounds.assemble(t));
    return out;
}

PretextDataset generate_pretext_dataset(std::size_t n, const ParamBounds& bounds, std::uint64_t seed,
                                        SampleMode mode, const SimSettings& sim) {
    PretextDataset data;
    data.bounds = bounds;
    data.seed = seed;
    data.mode = mode;
    data.attempted = n;
    data.examples.reserve(n);

    for (const Theta& theta : sample_thetas(n, bounds, seed, mode)) {
        try {
            const Trajectory traj = simulate_cycles(bounds.assemble(theta), std::nullopt, sim);
            const EdEs edes = ed_es_volumes(traj);
            data.examples.push_back({theta, edes.v_ed, edes.v_es});
        } catch (const SimulationError&) {
            ++data.failed;
        } catch (const ValidationError&) {
            ++data.failed;  // volumes left the physiological regime
        }
    }
    if (data.failed * 100 > data.attempted) {
        throw ValidationError("pretext dataset: more than 1% of simulations failed (" +
                              std::to_string(data.failed) + " of " + std::to_string(data.attempted) + ")");
    }
    return data;
}

RenderOperator RenderOperator::make(std::uint64_t render_seed) {
    RenderOperator op;
    op.render_seed = render_seed;
    Rng rng(render_seed);
    const auto fill = [&rng](std::vector<double>& v, std::size_t count, double scale) {
        v.resize(count);
        for (double& x : v) x = rng.uniform(-scale, scale);
    };
    // Draw order is part of the format: w1, b1, w2, b2.
    fill(op.w1, kHidden * kInput, 1.5 / std::sqrt(static_cast<double>(kInput)));
    fill(op.b1, kHidden, 0.5);
    fill(op.w2, kOutput * kHidden, 1.5 / std::sqrt(static_cast<double>(kHidden)));
    fill(op.b2, kOutput, 0.5);
    return op;
}

std::array<double, RenderOperator::kInput> RenderOperator::volume_features(const Trajectory& traj) {
    const PvLoop loop = pv_loop(traj);
    const std::size_t m = loop.points.size();
    std::array<double, kInput> v{};
    for (std::size_t i = 0; i < kInput; ++i) {
        // Phase grid [0, 1): the wrap sample duplicates phase 0, skip it.
        const double pos = static_cast<double>(i) / static_cast<double>(kInput) * static_cast<double>(m - 1);
        const auto lo_idx = std::min(static_cast<std::size_t>(pos), m - 2);
        const double frac = pos - static_cast<double>(lo_idx);
        const double vol = loop.points[lo_idx].v_lv + frac * (loop.points[lo_idx + 1].v_lv - loop.points[lo_idx].v_lv);
        v[i] = (vol - 100.0) / 100.0;
    }
    return v;
}

std::array<double, RenderOperator::kOutput> RenderOperator::apply(const std::array<double, kInput>& v) const {
    std::array<double, kHidden> h{};
    for (std::size_t r = 0; r < kHidden; ++r) {
        double acc = b1[r];
        for (std::size_t c = 0; c < kInput; ++c) acc += w1[r * kInput + c] * v[c];
        h[r] = std::max(acc, 0.0);
    }
    std::array<double, kOutput> y{};
    for (std::size_t r = 0; r < kOutput; ++r) {
        double acc = b2[r];
        for (std::size_t c = 0; c < kHidden; ++c) acc += w2[r * kHidden + c] * h[c];
        y[r] = std::tanh(acc);
    }
    return y;
}

std::vector<double> render_measurement(const Trajectory& traj, const RenderOperator& op, double noise_sigma,
                                       std::uint64_t noise_seed) {
    if (noise_sigma < 0.0) throw ValidationError("render_measurement: noise_sigma must be >= 0");
    const auto y = op.apply(RenderOperator::volume_features(traj));
    std::vector<double> out(y.begin(), y.end());
    if (noise_sigma > 0.0) {
        Rng rng(noise_seed);
        for (double& v : out) v += noise_sigma * rng.gaussian();
    }
    return out;
}

FinetuneDataset generate_finetune_dataset(std::size_t n, const ParamBounds& bounds, std::uint64_t seed,
                                          std::uint64_t render_seed, double noise_sigma, const SimSettings& sim) {
    if (noise_sigma < 0.0) throw ValidationError("finetune dataset: noise_sigma must be >= 0");
    FinetuneDataset data;
    data.bounds = bounds;
    data.seed = seed;
    data.render_seed = render_seed;
    data.noise_sigma = noise_sigma;
    data.attempted = n;
    data.measurements.reserve(n);

    const RenderOperator op = RenderOperator::make(render_seed);
    const std::uint64_t noise_base = mix_seed(seed, render_seed);
    std::size_t index = 0;
    for (const Theta& theta : sample_thetas(n, bounds, seed, SampleMode::uniform)) {
        const std::uint64_t noise_seed = mix_seed(noise_base, index++);
        try {
            const Trajectory traj = simulate_cycles(bounds.assemble(theta), std::nullopt, sim);
            const EdEs edes = ed_es_volumes(traj);
            Measurement m;
            m.y = render_measurement(traj, op, noise_sigma, noise_seed);
            m.v_ed = edes.v_ed;
            m.v_es = edes.v_es;
            m.theta = theta;
            data.measurements.push_back(std::move(m));
        } catch (const SimulationError&) {
            ++data.failed;
        } catch (const ValidationError&) {
            ++data.failed;
        }
    }
    if (data.failed * 100 > data.attempted) {
        throw ValidationError("finetune dataset: more than 1% of simulations failed (" +
                              std::to_string(data.failed) + " of " + std::to_string(data.attempted) + ")");
    }
    return data;
}

namespace {

json dataset_sidecar_common(const ParamBounds& bounds, std::uint64_t seed, std::size_t attempted,
                            std::size_t failed) {
    return json{
        {"bounds", json::parse(to_json_string(bounds))},
        {"seed", seed},
        {"attempted", attempted},
        {"failed", failed},
    };
}

void write_sidecar(const json& j, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw FileError("cannot write sidecar file: " + path);
    out << j.dump(2) << '\n';
}

json read_sidecar(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FileError("cannot open sidecar file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw ValidationError("sidecar: malformed JSON in " + path + ": " + e.what());
    }
    return j;
}

}  // namespace

void write_pretext_csv(const PretextDataset& data, const std::string& csv_path, const std::string& sidecar_path) {
    std::vector<std::string> header;
    for (std::size_t i = 1; i <= kLearnableCount; ++i) header.push_back("theta_" + std::to_string(i));
    header.emplace_back("v_ed");
    header.emplace_back("v_es");

    std::vector<std::vector<double>> rows;
    rows.reserve(data.examples.size());
    for (const PretextExample& e : data.examples) {
        std::vector<double> row(e.theta.begin(), e.theta.end());
        row.push_back(e.v_ed);
        row.push_back(e.v_es);
        rows.push_back(std::move(row));
    }

    json sidecar = dataset_sidecar_common(data.bounds, data.seed, data.attempted, data.failed);
    sidecar["kind"] = "pretext";
    sidecar["n"] = data.examples.size();
    sidecar["mode"] = data.mode == SampleMode::grid ? "grid" : "uniform";
    const std::string hash = config_hash_hex(sidecar.dump());
    sidecar["config_hash"] = hash;

    write_csv(csv_path, meta_comments("gen-pretext", {{"config_hash", hash}, {"seed", std::to_string(data.seed)}}),
              header, rows);
    write_sidecar(sidecar, sidecar_path);
}

PretextDataset read_pretext_csv(const std::string& csv_path, const std::string& sidecar_path) {
    const json sidecar = read_sidecar(sidecar_path);
    if (!sidecar.contains("kind") || sidecar.at("kind") != "pretext") {
        throw ValidationError("sidecar: not a pretext dataset: " + sidecar_path);
    }
    PretextDataset data;
    data.bounds = bounds_from_json_obj(sidecar.at("bounds"));
    data.seed = sidecar.at("seed").get<std::uint64_t>();
    data.mode = sidecar.at("mode") == "grid" ? SampleMode::grid : SampleMode::uniform;
    data.attempted = sidecar.at("attempted").get<std::size_t>();
    data.failed = sidecar.at("failed").get<std::size_t>();

    const CsvTable table = read_csv(csv_path);
    if (table.header.size() != kLearnableCount + 2) {
        throw ValidationError("pretext csv: expected " + std::to_string(kLearnableCount + 2) + " columns");
    }
    data.examples.reserve(table.rows.size());
    for (const auto& row : table.rows) {
        PretextExample e;
        for (std::size_t i = 0; i < kLearnableCount; ++i) e.theta[i] = row[i];
        e.v_ed = row[kLearnableCount];
        e.v_es = row[kLearnableCount + 1];
        data.examples.push_back(e);
    }
    return data;
}

void write_finetune_csv(const FinetuneDataset& data, const std::string& csv_path, const std::string& sidecar_path) {
    std::vector<std::string> header;
    for (std::size_t i = 1; i <= RenderOperator::kOutput; ++i) header.push_back("y_" + std::to_string(i));
    header.emplace_back("v_ed");
    header.emplace_back("v_es");
    for (std::size_t i = 1; i <= kLearnableCount; ++i) header.push_back("theta_" + std::to_string(i));

    std::vector<std::vector<double>> rows;
    rows.reserve(data.measurements.size());
    for (const Measurement& m : data.measurements) {
        std::vector<double> row(m.y.begin(), m.y.end());
        row.push_back(m.v_ed);
        row.push_back(m.v_es);
        row.insert(row.end(), m.theta.begin(), m.theta.end());
        rows.push_back(std::move(row));
    }

    json sidecar = dataset_sidecar_common(data.bounds, data.seed, data.attempted, data.failed);
    sidecar["kind"] = "finetune";
    sidecar["n"] = data.measurements.size();
    sidecar["render_seed"] = data.render_seed;
    sidecar["noise_sigma"] = data.noise_sigma;
    sidecar["split"] = json::array({data.n_train(), data.n_val(), data.n_test()});
    const std::string hash = config_hash_hex(sidecar.dump());
    sidecar["config_hash"] = hash;

    write_csv(csv_path,
              meta_comments("gen-finetune", {{"config_hash", hash},
                                             {"seed", std::to_string(data.seed)},
                                             {"render_seed", std::to_string(data.render_seed)}}),
              header, rows);
    write_sidecar(sidecar, sidecar_path);
}

FinetuneDataset read_finetune_csv(const std::string& csv_path, const std::string& sidecar_path) {
    const json sidecar = read_sidecar(sidecar_path);
    if (!sidecar.contains("kind") || sidecar.at("kind") != "finetune") {
        throw ValidationError("sidecar: not a finetune dataset: " + sidecar_path);
    }
    FinetuneDataset data;
    data.bounds = bounds_from_json_obj(sidecar.at("bounds"));
    data.seed = sidecar.at("seed").get<std::uint64_t>();
    data.render_seed = sidecar.at("render_seed").get<std::uint64_t>();
    data.noise_sigma = sidecar.at("noise_sigma").get<double>();
    data.attempted = sidecar.at("attempted").get<std::size_t>();
    data.failed = sidecar.at("failed").get<std::size_t>();

    const CsvTable table = read_csv(csv_path);
    const std::size_t expected = RenderOperator::kOutput + 2 + kLearnableCount;
    if (table.header.size() != expected) {
        throw ValidationError("finetune csv: expected " + std::to_string(expected) + " columns");
    }
    data.measurements.reserve(table.rows.size());
    for (const auto& row : table.rows) {
        Measurement m;
        m.y.assign(row.begin(), row.begin() + RenderOperator::kOutput);
        m.v_ed = row[RenderOperator::kOutput];
        m.v_es = row[RenderOperator::kOutput + 1];
        for (std::size_t i = 0; i < kLearnableCount; ++i) m.theta[i] = row[RenderOperator::kOutput + 2 + i];
        data.measurements.push_back(std::move(m));
    }
    return data;
}

}  // namespace cardiotwin
