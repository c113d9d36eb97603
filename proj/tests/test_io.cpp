#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <unistd.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cardiotwin/csv.hpp"
#include "cardiotwin/errors.hpp"
#include "cardiotwin/svg.hpp"
#include "cardiotwin/traj_io.hpp"

using namespace cardiotwin;

namespace {

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        path = std::filesystem::temp_directory_path() / ("cardiotwin-io-" + std::to_string(::getpid()));
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    std::string file(const char* name) const { return (path / name).string(); }
};

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

}  // namespace

TEST_CASE("numeric formatting keeps nine significant digits") {
    CHECK(fmt_g9(0.1) == "0.1");
    CHECK(fmt_g9(138.494) == "138.494");
    CHECK(fmt_g9(0.0) == "0");
    CHECK(fmt_g9(-2.5e-7) == "-2.5e-07");
    // A full-precision value survives to nine digits on re-parse.
    const double v = 15.454545454545453;
    const double back = std::stod(fmt_g9(v));
    CHECK(std::abs(back - v) <= 1e-8 * std::abs(v));
}

TEST_CASE("csv artifacts round trip comments, header and rows") {
    TempDir dir;
    const std::vector<std::string> comments{"tool=unit", "config_hash=abc123"};
    const std::vector<std::string> header{"alpha", "beta"};
    const std::vector<std::vector<double>> rows{{1.0, 2.5}, {-3.25, 4.75e-3}};
    write_csv(dir.file("t.csv"), comments, header, rows);

    const CsvTable t = read_csv(dir.file("t.csv"));
    CHECK(t.comments == comments);
    CHECK(t.header == header);
    REQUIRE(t.rows.size() == 2);
    CHECK(t.rows[0][0] == doctest::Approx(1.0));
    CHECK(t.rows[1][1] == doctest::Approx(4.75e-3));
    CHECK(t.column("beta") == 1);
    CHECK_THROWS_AS(t.column("gamma"), ValidationError);
}

TEST_CASE("csv reader rejects ragged and non-numeric rows") {
    TempDir dir;
    {
        std::ofstream out(dir.file("bad.csv"));
        out << "a,b\n1.0,2.0\n3.0\n";
    }
    CHECK_THROWS_AS(read_csv(dir.file("bad.csv")), ValidationError);
    {
        std::ofstream out(dir.file("nan.csv"));
        out << "a,b\n1.0,zzz\n";
    }
    CHECK_THROWS_AS(read_csv(dir.file("nan.csv")), ValidationError);
    CHECK_THROWS_AS(read_csv(dir.file("absent.csv")), FileError);
}

TEST_CASE("config hashing is stable and content-sensitive") {
    // Standard 64-bit FNV-1a test vectors.
    CHECK(fnv1a64("") == 14695981039346656037ULL);
    CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
    CHECK(config_hash_hex("x") != config_hash_hex("y"));
    CHECK(config_hash_hex("x") == config_hash_hex("x"));
    CHECK(config_hash_hex("x").size() == 16);
}

TEST_CASE("metadata comments carry the tool name and key-value pairs") {
    const auto lines = meta_comments("simulate", {{"seed", "7"}, {"config_hash", "beef"}});
    bool saw_tool = false, saw_seed = false, saw_hash = false;
    for (const std::string& line : lines) {
        saw_tool = saw_tool || line.find("simulate") != std::string::npos;
        saw_seed = saw_seed || line.find("seed=7") != std::string::npos;
        saw_hash = saw_hash || line.find("config_hash=beef") != std::string::npos;
    }
    CHECK(saw_tool);
    CHECK(saw_seed);
    CHECK(saw_hash);
}

TEST_CASE("trajectory CSV round trips states and observables") {
    TempDir dir;
    const PatientParams p = PatientParams::reference();
    const Trajectory traj = simulate_cycles(p, std::nullopt, {1, 200});
    write_trajectory_csv(dir.file("traj.csv"), traj, "simulate", {{"seed", "0"}});

    const StateSeries back = read_trajectory_csv(dir.file("traj.csv"));
    REQUIRE(back.size() == traj.size());
    CHECK(back.dim == 5);
    CHECK(back.dt == doctest::Approx(traj.dt).epsilon(1e-9));
    CHECK(back.t0 == doctest::Approx(traj.t0));
    for (std::size_t k = 0; k < traj.size(); k += 17) {
        for (std::size_t j = 0; j < 5; ++j) {
            CHECK(back.component(k, j) ==
                  doctest::Approx(traj.component(k, j)).epsilon(1e-8).scale(1.0));
        }
        CHECK(back.p_lv[k] == doctest::Approx(traj.p_lv(k)).epsilon(1e-8).scale(1.0));
        CHECK(back.v_lv[k] == doctest::Approx(traj.v_lv(k)).epsilon(1e-8).scale(1.0));
    }
}

TEST_CASE("trajectory CSV keeps the pump flow column when present") {
    TempDir dir;
    LvadParams lvad = LvadParams::reference();
    lvad.omega_schedule = OmegaSchedule::constant(9000.0);
    const Trajectory traj = simulate_cycles(PatientParams::reference(), lvad, {1, 2000});
    write_trajectory_csv(dir.file("pump.csv"), traj, "simulate");
    const StateSeries back = read_trajectory_csv(dir.file("pump.csv"));
    CHECK(back.dim == 6);
    CHECK(back.size() == 2001);
}

TEST_CASE("trajectory reader validates the uniform grid") {
    TempDir dir;
    const Trajectory traj = simulate_cycles(PatientParams::reference(), std::nullopt, {1, 50});
    write_trajectory_csv(dir.file("t.csv"), traj, "simulate");

    std::string text = slurp(dir.file("t.csv"));
    // Corrupt one time stamp mid-file by an amount far above the grid slack.
    const std::size_t pos = text.find("\n0.4,");
    REQUIRE(pos != std::string::npos);
    text.replace(pos, 5, "\n0.47,");
    {
        std::ofstream out(dir.file("warped.csv"));
        out << text;
    }
    CHECK_THROWS_AS(read_trajectory_csv(dir.file("warped.csv")), FileError);
}

TEST_CASE("loop CSV round trips the orbit and its cycle index") {
    TempDir dir;
    const Trajectory traj = simulate_cycles(PatientParams::reference(), std::nullopt, {2, 400});
    const PvLoop loop = pv_loop(traj);
    write_pv_loop_csv(dir.file("loop.csv"), loop, "simulate");

    const PvLoop back = read_pv_loop_csv(dir.file("loop.csv"));
    CHECK(back.cycle_index == loop.cycle_index);
    REQUIRE(back.points.size() == loop.points.size());
    for (std::size_t i = 0; i < loop.points.size(); i += 29) {
        CHECK(back.points[i].v_lv == doctest::Approx(loop.points[i].v_lv).epsilon(1e-8));
        CHECK(back.points[i].p_lv == doctest::Approx(loop.points[i].p_lv).epsilon(1e-8));
    }
}

TEST_CASE("loop rendering emits a deterministic standalone SVG") {
    TempDir dir;
    const Trajectory traj = simulate_cycles(PatientParams::reference(), std::nullopt, {2, 400});
    const PvLoop loop = pv_loop(traj);

    const std::string svg = pv_loops_svg({loop}, {"baseline"}, "Pressure-volume loop");
    CHECK(svg.rfind("<svg", 0) == 0);
    CHECK(svg.find("V_LV (ml)") != std::string::npos);
    CHECK(svg.find("P_LV (mmHg)") != std::string::npos);
    CHECK(svg.find("baseline") != std::string::npos);
    CHECK(svg.find("<polyline") != std::string::npos);
    CHECK(svg.find("</svg>") != std::string::npos);

    CHECK(pv_loops_svg({loop}, {"baseline"}, "Pressure-volume loop") == svg);

    write_pv_loops_svg(dir.file("loop.svg"), {loop}, {"baseline"}, "Pressure-volume loop");
    CHECK(slurp(dir.file("loop.svg")) == svg);
}

TEST_CASE("loop rendering draws one polyline per loop") {
    const Trajectory traj = simulate_cycles(PatientParams::reference(), std::nullopt, {2, 400});
    const PvLoop a = pv_loop(traj, 0);
    const PvLoop b = pv_loop(traj, 1);
    const std::string svg = pv_loops_svg({a, b}, {"first", "second"});
    std::size_t count = 0;
    for (std::size_t pos = svg.find("<polyline"); pos != std::string::npos;
         pos = svg.find("<polyline", pos + 1)) {
        ++count;
    }
    CHECK(count == 2);
    CHECK(svg.find("first") != std::string::npos);
    CHECK(svg.find("second") != std::string::npos);
}

TEST_CASE("loop rendering pads the axes beyond the data extrema") {
    PvLoop box;
    box.points = {{100.0, 10.0}, {150.0, 10.0}, {150.0, 90.0}, {100.0, 90.0}, {100.0, 10.0}};
    const std::string svg = pv_loops_svg({box}, {"box"});

    // With 5% padding on each side the data occupies the middle 10/11 of the
    // frame, so every vertex sits well clear of the plot border.
    const std::size_t start = svg.find("points=\"");
    REQUIRE(start != std::string::npos);
    const std::size_t end = svg.find('"', start + 8);
    REQUIRE(end != std::string::npos);
    std::istringstream pts(svg.substr(start + 8, end - start - 8));
    std::string pair;
    std::size_t seen = 0;
    while (pts >> pair) {
        const auto comma = pair.find(',');
        REQUIRE(comma != std::string::npos);
        const double x = std::stod(pair.substr(0, comma));
        const double y = std::stod(pair.substr(comma + 1));
        CHECK(x > 64.0 + 10.0);
        CHECK(x < 616.0 - 10.0);
        CHECK(y > 44.0 + 10.0);
        CHECK(y < 424.0 - 10.0);
        ++seen;
    }
    CHECK(seen == box.points.size());
}

TEST_CASE("loop rendering escapes markup in labels") {
    PvLoop loop;
    loop.points = {{100.0, 10.0}, {120.0, 40.0}, {100.0, 10.0}};
    const std::string svg = pv_loops_svg({loop}, {"a<b&c>"});
    CHECK(svg.find("a<b&c>") == std::string::npos);
    CHECK(svg.find("a&lt;b&amp;c&gt;") != std::string::npos);
}

TEST_CASE("loop rendering rejects malformed input") {
    PvLoop loop;
    loop.points = {{100.0, 10.0}, {120.0, 40.0}};
    CHECK_THROWS_AS(pv_loops_svg({}, {}), ValidationError);
    CHECK_THROWS_AS(pv_loops_svg({loop}, {"a", "b"}), ValidationError);
    CHECK_THROWS_AS(pv_loops_svg({PvLoop{}}, {"empty"}), ValidationError);
    CHECK_THROWS_AS(write_pv_loops_svg("/nonexistent-dir/x.svg", {loop}, {"a"}), FileError);
}
