#include "cardiotwin/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "cardiotwin/errors.hpp"

namespace cardiotwin {

namespace {

constexpr int kWidth = 640;
constexpr int kHeight = 480;
constexpr double kLeft = 64.0, kRight = 616.0, kTop = 44.0, kBottom = 424.0;

constexpr const char* kPalette[] = {
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd",
    "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f",
};
constexpr std::size_t kPaletteSize = sizeof(kPalette) / sizeof(kPalette[0]);

std::string f2(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

std::string fg(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%g", v);
    return buf;
}

std::string xml_escape(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

struct AxisRange {
    double lo = 0.0;
    double hi = 1.0;
};

AxisRange padded(double lo, double hi) {
    double range = hi - lo;
    if (!(range > 0.0)) range = std::max(std::abs(lo), 1.0);  // degenerate: all points equal
    return {lo - 0.05 * range, hi + 0.05 * range};
}

double nice_step(double range) {
    const double raw = range / 5.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    const double frac = raw / mag;
    const double f = frac <= 1.0 ? 1.0 : frac <= 2.0 ? 2.0 : frac <= 5.0 ? 5.0 : 10.0;
    return f * mag;
}

}  // namespace

std::string pv_loops_svg(const std::vector<PvLoop>& loops, const std::vector<std::string>& labels,
                         const std::string& title) {
    if (loops.empty()) throw ValidationError("pv_loops_svg: need at least one loop");
    if (!labels.empty() && labels.size() != loops.size()) {
        throw ValidationError("pv_loops_svg: label count must match loop count");
    }
    for (const auto& loop : loops) {
        if (loop.points.empty()) throw ValidationError("pv_loops_svg: empty loop");
    }

    double v_lo = loops[0].points[0].v_lv, v_hi = v_lo;
    double p_lo = loops[0].points[0].p_lv, p_hi = p_lo;
    for (const auto& loop : loops) {
        for (const auto& pt : loop.points) {
            v_lo = std::min(v_lo, pt.v_lv);
            v_hi = std::max(v_hi, pt.v_lv);
            p_lo = std::min(p_lo, pt.p_lv);
            p_hi = std::max(p_hi, pt.p_lv);
        }
    }
    const AxisRange vx = padded(v_lo, v_hi);
    const AxisRange py = padded(p_lo, p_hi);

    const auto map_x = [&](double v) { return kLeft + (v - vx.lo) / (vx.hi - vx.lo) * (kRight - kLeft); };
    const auto map_y = [&](double p) { return kBottom - (p - py.lo) / (py.hi - py.lo) * (kBottom - kTop); };

    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
        << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\">\n";
    out << "<rect x=\"0\" y=\"0\" width=\"" << kWidth << "\" height=\"" << kHeight << "\" fill=\"#ffffff\"/>\n";
    if (!title.empty()) {
        out << "<text x=\"" << f2(0.5 * kWidth)
            << "\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\" text-anchor=\"middle\">"
            << xml_escape(title) << "</text>\n";
    }

    out << "<rect x=\"" << f2(kLeft) << "\" y=\"" << f2(kTop) << "\" width=\"" << f2(kRight - kLeft)
        << "\" height=\"" << f2(kBottom - kTop) << "\" fill=\"none\" stroke=\"#333333\"/>\n";

    const double x_step = nice_step(vx.hi - vx.lo);
    for (double tick = std::ceil(vx.lo / x_step) * x_step; tick <= vx.hi + 1e-9 * x_step; tick += x_step) {
        const double x = map_x(tick);
        out << "<line x1=\"" << f2(x) << "\" y1=\"" << f2(kBottom) << "\" x2=\"" << f2(x) << "\" y2=\""
            << f2(kBottom + 5.0) << "\" stroke=\"#333333\"/>\n";
        out << "<text x=\"" << f2(x) << "\" y=\"" << f2(kBottom + 20.0)
            << "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">" << fg(tick)
            << "</text>\n";
    }
    const double y_step = nice_step(py.hi - py.lo);
    for (double tick = std::ceil(py.lo / y_step) * y_step; tick <= py.hi + 1e-9 * y_step; tick += y_step) {
        const double y = map_y(tick);
        out << "<line x1=\"" << f2(kLeft - 5.0) << "\" y1=\"" << f2(y) << "\" x2=\"" << f2(kLeft)
            << "\" y2=\"" << f2(y) << "\" stroke=\"#333333\"/>\n";
        out << "<text x=\"" << f2(kLeft - 8.0) << "\" y=\"" << f2(y + 4.0)
            << "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">" << fg(tick)
            << "</text>\n";
    }

    out << "<text x=\"" << f2(0.5 * (kLeft + kRight)) << "\" y=\"" << f2(kBottom + 40.0)
        << "\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\">V_LV (ml)</text>\n";
    out << "<text x=\"18\" y=\"" << f2(0.5 * (kTop + kBottom))
        << "\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
        << f2(0.5 * (kTop + kBottom)) << ")\">P_LV (mmHg)</text>\n";

    for (std::size_t i = 0; i < loops.size(); ++i) {
        out << "<polyline fill=\"none\" stroke=\"" << kPalette[i % kPaletteSize]
            << "\" stroke-width=\"1.5\" points=\"";
        const auto& pts = loops[i].points;
        for (std::size_t j = 0; j < pts.size(); ++j) {
            if (j != 0) out << ' ';
            out << f2(map_x(pts[j].v_lv)) << ',' << f2(map_y(pts[j].p_lv));
        }
        out << "\"/>\n";
    }

    if (!labels.empty()) {
        const double lx = kRight - 150.0;
        double ly = kTop + 14.0;
        for (std::size_t i = 0; i < labels.size(); ++i) {
            out << "<line x1=\"" << f2(lx) << "\" y1=\"" << f2(ly - 4.0) << "\" x2=\"" << f2(lx + 22.0)
                << "\" y2=\"" << f2(ly - 4.0) << "\" stroke=\"" << kPalette[i % kPaletteSize]
                << "\" stroke-width=\"2\"/>\n";
            out << "<text x=\"" << f2(lx + 28.0) << "\" y=\"" << f2(ly)
                << "\" font-family=\"sans-serif\" font-size=\"12\">" << xml_escape(labels[i]) << "</text>\n";
            ly += 17.0;
        }
    }

    out << "</svg>\n";
    return out.str();
}

void write_pv_loops_svg(const std::string& path, const std::vector<PvLoop>& loops,
                        const std::vector<std::string>& labels, const std::string& title) {
    const std::string body = pv_loops_svg(loops, labels, title);
    std::ofstream f(path, std::ios::binary);
    if (!f) throw FileError("cannot open for writing: " + path);
    f << body;
    if (!f) throw FileError("write failed: " + path);
}

}  // namespace cardiotwin
