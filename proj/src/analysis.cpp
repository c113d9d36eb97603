#include "cardiotwin/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace cardiotwin {

namespace {

/// Index of the first sample of the final full cycle, and the per-cycle
/// sample count. The window covers [t_last - t_c, t_last] inclusive.
struct CycleWindow {
    std::size_t begin = 0;
    std::size_t samples_per_cycle = 0;
};

CycleWindow final_cycle_window(const Trajectory& traj) {
    const std::size_t n = traj.size();
    if (n < 3 || traj.dt <= 0.0) throw ValidationError("analysis: trajectory is empty or unsampled");
    const double t_c = traj.params.t_c;
    const auto spc = static_cast<std::size_t>(std::llround(t_c / traj.dt));
    if (spc < 2) throw ValidationError("analysis: fewer than two samples per cycle");
    if (n < spc + 1 || traj.duration() < t_c * (1.0 - 1e-9)) {
        throw ValidationError("analysis: trajectory spans less than one full cycle");
    }
    return {n - 1 - spc, spc};
}

std::size_t final_cycle_index(const Trajectory& traj) {
    const double cycles = traj.duration() / traj.params.t_c;
    const auto whole = static_cast<std::size_t>(std::floor(cycles + 1e-9));
    return whole == 0 ? 0 : whole - 1;
}

}  // namespace

EdEs ed_es_volumes(const Trajectory& traj) {
    const CycleWindow w = final_cycle_window(traj);
    EdEs out;
    out.v_ed = -1e300;
    out.v_es = 1e300;
    for (std::size_t k = w.begin; k < traj.size(); ++k) {
        const double v = traj.v_lv(k);
        if (v > out.v_ed) {
            out.v_ed = v;
            out.t_ed = traj.time(k);
        }
        if (v < out.v_es) {
            out.v_es = v;
            out.t_es = traj.time(k);
        }
    }
    if (!(out.v_es > 0.0)) {
        throw ValidationError("ed_es_volumes: end-systolic volume is non-positive (non-physiological run)");
    }
    return out;
}

double ef_from_volumes(double v_ed, double v_es) {
    if (!(v_ed > 0.0)) throw ValidationError("ejection fraction: v_ed must be positive");
    return (v_ed - v_es) / v_ed;
}

double ejection_fraction(const EdEs& edes) { return ef_from_volumes(edes.v_ed, edes.v_es); }

PvLoop pv_loop(const Trajectory& traj) {
    const CycleWindow w = final_cycle_window(traj);
    PvLoop loop;
    loop.cycle_index = final_cycle_index(traj);
    loop.points.reserve(w.samples_per_cycle + 1);
    for (std::size_t k = w.begin; k < traj.size(); ++k) {
        loop.points.push_back({traj.v_lv(k), traj.p_lv(k)});
    }
    return loop;
}

PvLoop pv_loop(const Trajectory& traj, std::size_t cycle_index) {
    const CycleWindow w = final_cycle_window(traj);
    if (cycle_index > final_cycle_index(traj)) {
        throw ValidationError("pv_loop: cycle index past the end of the trajectory");
    }
    // Cycle c covers samples [c*spc, (c+1)*spc] on the uniform grid.
    const std::size_t begin = cycle_index * w.samples_per_cycle;
    PvLoop loop;
    loop.cycle_index = cycle_index;
    loop.points.reserve(w.samples_per_cycle + 1);
    for (std::size_t k = begin; k <= begin + w.samples_per_cycle && k < traj.size(); ++k) {
        loop.points.push_back({traj.v_lv(k), traj.p_lv(k)});
    }
    return loop;
}

PvLoop resample_loop(const PvLoop& loop, std::size_t n) {
    if (loop.points.size() < 2) throw ValidationError("resample_loop: need at least two points");
    if (n < 2) throw ValidationError("resample_loop: need at least two output points");

    PvLoop out;
    out.cycle_index = loop.cycle_index;
    out.points.resize(n);
    const std::size_t m = loop.points.size();
    for (std::size_t i = 0; i < n; ++i) {
        const double phase = static_cast<double>(i) / static_cast<double>(n - 1);
        const double pos = phase * static_cast<double>(m - 1);
        const auto lo = std::min(static_cast<std::size_t>(pos), m - 2);
        const double frac = pos - static_cast<double>(lo);
        const PvLoop::Point& a = loop.points[lo];
        const PvLoop::Point& b = loop.points[lo + 1];
        out.points[i] = {a.v_lv + frac * (b.v_lv - a.v_lv), a.p_lv + frac * (b.p_lv - a.p_lv)};
    }
    return out;
}

PvLoop average_pv_loop(const std::vector<PvLoop>& loops) {
    if (loops.empty()) throw ValidationError("average_pv_loop: empty cohort");
    constexpr std::size_t kGrid = 256;

    PvLoop avg;
    avg.cycle_index = loops.front().cycle_index;
    avg.points.assign(kGrid, {0.0, 0.0});
    for (const PvLoop& loop : loops) {
        const PvLoop r = resample_loop(loop, kGrid);
        for (std::size_t i = 0; i < kGrid; ++i) {
            avg.points[i].v_lv += r.points[i].v_lv;
            avg.points[i].p_lv += r.points[i].p_lv;
        }
    }
    const auto inv = 1.0 / static_cast<double>(loops.size());
    for (auto& pt : avg.points) {
        pt.v_lv *= inv;
        pt.p_lv *= inv;
    }
    return avg;
}

double spearman(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size() || a.size() < 2) {
        throw ValidationError("spearman: need two equally sized series of length >= 2");
    }
    const auto ranks = [](std::span<const double> v) {
        const std::size_t n = v.size();
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return v[i] < v[j]; });
        std::vector<double> r(n);
        std::size_t i = 0;
        while (i < n) {
            std::size_t j = i;
            while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
            const double avg_rank = 0.5 * static_cast<double>(i + j) + 1.0;  // ties share the mean rank
            for (std::size_t k = i; k <= j; ++k) r[order[k]] = avg_rank;
            i = j + 1;
        }
        return r;
    };

    const std::vector<double> ra = ranks(a);
    const std::vector<double> rb = ranks(b);
    const std::size_t n = a.size();
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        ma += ra[i];
        mb += rb[i];
    }
    ma /= static_cast<double>(n);
    mb /= static_cast<double>(n);
    double num = 0.0, da = 0.0, db = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        num += (ra[i] - ma) * (rb[i] - mb);
        da += (ra[i] - ma) * (ra[i] - ma);
        db += (rb[i] - mb) * (rb[i] - mb);
    }
    if (da == 0.0 || db == 0.0) throw ValidationError("spearman: a series is constant");
    return num / std::sqrt(da * db);
}

}  // namespace cardiotwin
