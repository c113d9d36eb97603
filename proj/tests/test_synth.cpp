#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <unistd.h>

#include <cmath>
#include <filesystem>
#include <set>
#include <string>

#include "cardiotwin/errors.hpp"
#include "cardiotwin/synth.hpp"

using namespace cardiotwin;

namespace {

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        path = std::filesystem::temp_directory_path() /
               ("cardiotwin-synth-" + std::to_string(::getpid()));
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    std::string file(const char* name) const { return (path / name).string(); }
};

}  // namespace

TEST_CASE("uniform sampling stays inside the box and is seed-deterministic") {
    const ParamBounds bounds = ParamBounds::defaults();
    const auto a = sample_thetas(200, bounds, 707);
    const auto b = sample_thetas(200, bounds, 707);
    const auto c = sample_thetas(200, bounds, 708);
    REQUIRE(a.size() == 200);
    CHECK(a == b);
    CHECK(a != c);
    for (const Theta& t : a) CHECK(bounds.contains(t));
}

TEST_CASE("grid sampling tensorizes level counts whose product covers n") {
    const ParamBounds bounds = ParamBounds::defaults();

    SUBCASE("exact power gives every corner once") {
        const auto thetas = sample_thetas(128, bounds, 0, SampleMode::grid);
        REQUIRE(thetas.size() == 128);
        // Two levels per axis: every coordinate is an endpoint.
        for (const Theta& t : thetas) {
            for (std::size_t a = 0; a < kLearnableCount; ++a) {
                const bool endpoint = t[a] == bounds.lo[a] || t[a] == bounds.hi[a];
                CHECK(endpoint);
            }
        }
        // First point is the all-low corner, last the all-high corner, and
        // the final axis varies fastest.
        CHECK(thetas.front()[0] == bounds.lo[0]);
        CHECK(thetas.front()[kTc] == bounds.lo[kTc]);
        CHECK(thetas.back()[0] == bounds.hi[0]);
        CHECK(thetas.back()[kTc] == bounds.hi[kTc]);
        CHECK(thetas[1][kTc] == bounds.hi[kTc]);
        CHECK(thetas[1][0] == bounds.lo[0]);
        const std::set<Theta> unique(thetas.begin(), thetas.end());
        CHECK(unique.size() == 128);
    }

    SUBCASE("non-power counts truncate the lexicographic enumeration") {
        const auto thetas = sample_thetas(100, bounds, 0, SampleMode::grid);
        REQUIRE(thetas.size() == 100);
        const auto full = sample_thetas(128, bounds, 0, SampleMode::grid);
        for (std::size_t i = 0; i < 100; ++i) CHECK(thetas[i] == full[i]);
    }

    SUBCASE("grid ignores the seed") {
        CHECK(sample_thetas(64, bounds, 1, SampleMode::grid) ==
              sample_thetas(64, bounds, 2, SampleMode::grid));
    }
}

TEST_CASE("theta assembly and extraction are inverses") {
    const ParamBounds bounds = ParamBounds::defaults();
    const auto thetas = sample_thetas(32, bounds, 4242);
    for (const Theta& t : thetas) {
        const PatientParams p = bounds.assemble(t);
        CHECK(p.r_m == t[kRm]);
        CHECK(p.t_c == t[kTc]);
        CHECK(p.r_c == bounds.r_c);
        CHECK(p.start_pao == bounds.start_pao);
        CHECK(bounds.extract(p) == t);
    }
}

TEST_CASE("normalization maps the box onto the unit cube and back") {
    const ParamBounds bounds = ParamBounds::defaults();
    Theta lo{}, hi{};
    for (std::size_t a = 0; a < kLearnableCount; ++a) {
        lo[a] = bounds.lo[a];
        hi[a] = bounds.hi[a];
    }
    const Theta u_lo = bounds.normalize(lo);
    const Theta u_hi = bounds.normalize(hi);
    for (std::size_t a = 0; a < kLearnableCount; ++a) {
        CHECK(u_lo[a] == doctest::Approx(0.0));
        CHECK(u_hi[a] == doctest::Approx(1.0));
    }
    const auto thetas = sample_thetas(16, bounds, 5151);
    for (const Theta& t : thetas) {
        const Theta round = bounds.denormalize(bounds.normalize(t));
        for (std::size_t a = 0; a < kLearnableCount; ++a) {
            CHECK(round[a] == doctest::Approx(t[a]).epsilon(1e-12));
        }
    }
}

TEST_CASE("bounds validation rejects inverted boxes") {
    ParamBounds bounds = ParamBounds::defaults();
    bounds.lo[kEmax] = bounds.hi[kEmax] + 1.0;
    CHECK_THROWS_AS(bounds.validate(), ValidationError);
}

TEST_CASE("bounds JSON round trip preserves the box and the shared constants") {
    ParamBounds bounds = ParamBounds::defaults();
    bounds.lo[kVd] = 5.5;
    bounds.start_pao = 80.0;
    const ParamBounds back = param_bounds_from_json(to_json_string(bounds));
    CHECK(back.lo == bounds.lo);
    CHECK(back.hi == bounds.hi);
    CHECK(back.start_pao == 80.0);
    CHECK(back.r_c == bounds.r_c);
}

TEST_CASE("pretext generation simulates every sampled draw") {
    const ParamBounds bounds = ParamBounds::defaults();
    const PretextDataset data = generate_pretext_dataset(16, bounds, 77);
    REQUIRE(data.examples.size() == 16);
    CHECK(data.attempted == 16);
    CHECK(data.failed == 0);
    CHECK(data.seed == 77);
    for (const PretextExample& ex : data.examples) {
        CHECK(bounds.contains(ex.theta));
        CHECK(ex.v_ed > ex.v_es);
        CHECK(ex.v_es > 0.0);
    }
}

TEST_CASE("pretext generation is bitwise deterministic") {
    const ParamBounds bounds = ParamBounds::defaults();
    const PretextDataset a = generate_pretext_dataset(12, bounds, 88);
    const PretextDataset b = generate_pretext_dataset(12, bounds, 88);
    REQUIRE(a.examples.size() == b.examples.size());
    for (std::size_t i = 0; i < a.examples.size(); ++i) {
        CHECK(a.examples[i].theta == b.examples[i].theta);
        CHECK(a.examples[i].v_ed == b.examples[i].v_ed);
        CHECK(a.examples[i].v_es == b.examples[i].v_es);
    }
}

TEST_CASE("render operator is frozen by its seed") {
    const RenderOperator a = RenderOperator::make(404);
    const RenderOperator b = RenderOperator::make(404);
    const RenderOperator c = RenderOperator::make(405);
    CHECK(a.w1 == b.w1);
    CHECK(a.w2 == b.w2);
    CHECK(a.b1 == b.b1);
    CHECK(a.b2 == b.b2);
    CHECK(a.w1 != c.w1);
    REQUIRE(a.w1.size() == RenderOperator::kHidden * RenderOperator::kInput);
    REQUIRE(a.w2.size() == RenderOperator::kOutput * RenderOperator::kHidden);
}

TEST_CASE("rendered measurements depend on volumes and the noise seed") {
    const PatientParams p = PatientParams::reference();
    const Trajectory traj = simulate_cycles(p);
    const RenderOperator op = RenderOperator::make(404);

    const auto clean_a = render_measurement(traj, op);
    const auto clean_b = render_measurement(traj, op);
    REQUIRE(clean_a.size() == RenderOperator::kOutput);
    CHECK(clean_a == clean_b);
    for (double v : clean_a) {
        CHECK(std::abs(v) <= 1.0);  // tanh output before noise
    }

    const auto noisy_a = render_measurement(traj, op, 0.05, 1111);
    const auto noisy_b = render_measurement(traj, op, 0.05, 1111);
    const auto noisy_c = render_measurement(traj, op, 0.05, 2222);
    CHECK(noisy_a == noisy_b);
    CHECK(noisy_a != noisy_c);
    CHECK(noisy_a != clean_a);

    // A different patient produces a different volume curve, hence different
    // features.
    PatientParams p2 = p;
    p2.start_v = 200.0;
    const auto other = render_measurement(simulate_cycles(p2), op);
    CHECK(other != clean_a);
}

TEST_CASE("finetune generation wires splits and metadata") {
    const ParamBounds bounds = ParamBounds::defaults();
    const FinetuneDataset data = generate_finetune_dataset(12, bounds, 88, 99, 0.0);
    REQUIRE(data.measurements.size() == 12);
    CHECK(data.n_train() == 9);
    CHECK(data.n_val() == 1);
    CHECK(data.n_test() == 2);
    CHECK(data.render_seed == 99);
    CHECK(data.noise_sigma == 0.0);
    for (const Measurement& m : data.measurements) {
        CHECK(m.y.size() == RenderOperator::kOutput);
        CHECK(bounds.contains(m.theta));
        CHECK(m.v_ed > m.v_es);
    }
}

TEST_CASE("pretext dataset round trips through CSV and sidecar") {
    TempDir dir;
    const ParamBounds bounds = ParamBounds::defaults();
    const PretextDataset data = generate_pretext_dataset(16, bounds, 77);
    write_pretext_csv(data, dir.file("p.csv"), dir.file("p.json"));
    const PretextDataset back = read_pretext_csv(dir.file("p.csv"), dir.file("p.json"));

    REQUIRE(back.examples.size() == data.examples.size());
    CHECK(back.seed == data.seed);
    CHECK(back.mode == data.mode);
    CHECK(back.bounds.lo == data.bounds.lo);
    CHECK(back.bounds.hi == data.bounds.hi);
    for (std::size_t i = 0; i < data.examples.size(); ++i) {
        for (std::size_t a = 0; a < kLearnableCount; ++a) {
            CHECK(back.examples[i].theta[a] ==
                  doctest::Approx(data.examples[i].theta[a]).epsilon(1e-8));
        }
        CHECK(back.examples[i].v_ed == doctest::Approx(data.examples[i].v_ed).epsilon(1e-8));
        CHECK(back.examples[i].v_es == doctest::Approx(data.examples[i].v_es).epsilon(1e-8));
    }
}

TEST_CASE("finetune dataset round trips through CSV and sidecar") {
    TempDir dir;
    const ParamBounds bounds = ParamBounds::defaults();
    const FinetuneDataset data = generate_finetune_dataset(12, bounds, 88, 99, 0.05);
    write_finetune_csv(data, dir.file("f.csv"), dir.file("f.json"));
    const FinetuneDataset back = read_finetune_csv(dir.file("f.csv"), dir.file("f.json"));

    REQUIRE(back.measurements.size() == data.measurements.size());
    CHECK(back.seed == data.seed);
    CHECK(back.render_seed == data.render_seed);
    CHECK(back.noise_sigma == doctest::Approx(data.noise_sigma));
    for (std::size_t i = 0; i < data.measurements.size(); ++i) {
        REQUIRE(back.measurements[i].y.size() == data.measurements[i].y.size());
        for (std::size_t j = 0; j < data.measurements[i].y.size(); ++j) {
            CHECK(back.measurements[i].y[j] ==
                  doctest::Approx(data.measurements[i].y[j]).epsilon(1e-8));
        }
    }
}

TEST_CASE("dataset readers reject mismatched sidecars") {
    TempDir dir;
    const ParamBounds bounds = ParamBounds::defaults();
    const PretextDataset data = generate_pretext_dataset(8, bounds, 77);
    write_pretext_csv(data, dir.file("p.csv"), dir.file("p.json"));
    const FinetuneDataset fdata = generate_finetune_dataset(8, bounds, 88, 99, 0.0);
    write_finetune_csv(fdata, dir.file("f.csv"), dir.file("f.json"));

    CHECK_THROWS_AS(read_pretext_csv(dir.file("p.csv"), dir.file("f.json")), ValidationError);
    CHECK_THROWS_AS(read_finetune_csv(dir.file("f.csv"), dir.file("p.json")), ValidationError);
    CHECK_THROWS_AS(read_pretext_csv(dir.file("missing.csv"), dir.file("p.json")), FileError);
}
