#include "cardiotwin/traj_io.hpp"

#include <cmath>
#include <cstdlib>

#include "cardiotwin/csv.hpp"
#include "cardiotwin/errors.hpp"

namespace cardiotwin {

namespace {

std::string grid_config_json(const Trajectory& traj) {
    // Canonical description of what produced the samples, hashed into the
    // artifact so a file can be traced back to its configuration.
    std::string cfg = "{\"params\":" + to_json_string(traj.params, -1);
    if (traj.lvad) cfg += ",\"lvad\":" + to_json_string(*traj.lvad, -1);
    cfg += ",\"t0\":" + fmt_g9(traj.t0) + ",\"dt\":" + fmt_g9(traj.dt) +
           ",\"samples\":" + std::to_string(traj.size()) + "}";
    return cfg;
}

}  // namespace

void write_trajectory_csv(const std::string& path, const Trajectory& traj, const std::string& tool,
                          const std::map<std::string, std::string>& extra_meta) {
    if (traj.size() == 0) throw ValidationError("write_trajectory_csv: empty trajectory");

    std::map<std::string, std::string> kv = extra_meta;
    kv["dt"] = fmt_g9(traj.dt);
    kv["samples"] = std::to_string(traj.size());
    kv["dim"] = std::to_string(traj.dim);
    kv["config_hash"] = config_hash_hex(grid_config_json(traj));

    std::vector<std::string> header = {"t"};
    for (std::size_t j = 0; j < traj.dim; ++j) header.push_back("x" + std::to_string(j + 1));
    header.push_back("p_lv");
    header.push_back("v_lv");

    std::vector<std::vector<double>> rows;
    rows.reserve(traj.size());
    for (std::size_t k = 0; k < traj.size(); ++k) {
        std::vector<double> row;
        row.reserve(traj.dim + 3);
        row.push_back(traj.time(k));
        for (std::size_t j = 0; j < traj.dim; ++j) row.push_back(traj.component(k, j));
        row.push_back(traj.p_lv(k));
        row.push_back(traj.v_lv(k));
        rows.push_back(std::move(row));
    }
    write_csv(path, meta_comments(tool, kv), header, rows);
}

StateSeries read_trajectory_csv(const std::string& path) {
    const CsvTable table = read_csv(path);
    if (table.rows.size() < 2) throw FileError("trajectory CSV needs at least two samples: " + path);

    const std::size_t col_t = table.column("t");
    bool has_x6 = false;
    for (const auto& name : table.header) has_x6 = has_x6 || name == "x6";

    StateSeries out;
    out.dim = has_x6 ? 6 : 5;
    std::vector<std::size_t> col_x(out.dim);
    for (std::size_t j = 0; j < out.dim; ++j) col_x[j] = table.column("x" + std::to_string(j + 1));
    const std::size_t col_p = table.column("p_lv");
    const std::size_t col_v = table.column("v_lv");

    const std::size_t n = table.rows.size();
    out.t0 = table.rows[0][col_t];
    out.dt = (table.rows[n - 1][col_t] - out.t0) / static_cast<double>(n - 1);
    if (!(out.dt > 0.0)) throw FileError("trajectory CSV time column is not increasing: " + path);

    out.states.reserve(n * out.dim);
    out.p_lv.reserve(n);
    out.v_lv.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        const auto& row = table.rows[k];
        const double t_expect = out.t0 + static_cast<double>(k) * out.dt;
        if (std::abs(row[col_t] - t_expect) > 1e-6 * std::max(1.0, std::abs(t_expect))) {
            throw FileError("trajectory CSV is not on a uniform time grid: " + path);
        }
        for (std::size_t j = 0; j < out.dim; ++j) {
            const double v = row[col_x[j]];
            if (!std::isfinite(v)) throw FileError("trajectory CSV has non-finite state: " + path);
            out.states.push_back(v);
        }
        out.p_lv.push_back(row[col_p]);
        out.v_lv.push_back(row[col_v]);
        if (!std::isfinite(out.p_lv.back()) || !std::isfinite(out.v_lv.back())) {
            throw FileError("trajectory CSV has non-finite pressure/volume: " + path);
        }
    }
    return out;
}

void write_pv_loop_csv(const std::string& path, const PvLoop& loop, const std::string& tool,
                       const std::map<std::string, std::string>& extra_meta) {
    if (loop.points.empty()) throw ValidationError("write_pv_loop_csv: empty loop");

    std::map<std::string, std::string> kv = extra_meta;
    kv["cycle_index"] = std::to_string(loop.cycle_index);
    kv["points"] = std::to_string(loop.points.size());

    std::vector<std::vector<double>> rows;
    rows.reserve(loop.points.size());
    for (std::size_t i = 0; i < loop.points.size(); ++i) {
        rows.push_back({loop.phase(i), loop.points[i].v_lv, loop.points[i].p_lv});
    }
    write_csv(path, meta_comments(tool, kv), {"phase", "v_lv", "p_lv"}, rows);
}

PvLoop read_pv_loop_csv(const std::string& path) {
    const CsvTable table = read_csv(path);
    if (table.rows.empty()) throw FileError("PV-loop CSV has no rows: " + path);
    const std::size_t col_v = table.column("v_lv");
    const std::size_t col_p = table.column("p_lv");

    PvLoop loop;
    for (const auto& comment : table.comments) {
        const std::string key = "cycle_index=";
        if (comment.rfind(key, 0) == 0) {
            loop.cycle_index = static_cast<std::size_t>(std::strtoull(comment.c_str() + key.size(), nullptr, 10));
        }
    }
    loop.points.reserve(table.rows.size());
    for (const auto& row : table.rows) {
        loop.points.push_back({row[col_v], row[col_p]});
    }
    return loop;
}

}  // namespace cardiotwin
