#include "cycleguard/svg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "cycleguard/csv.hpp"
#include "cycleguard/error.hpp"

namespace cycleguard {

namespace {

// Short tick label: fixed notation for moderate magnitudes, scientific
// otherwise, always via the round-trip formatter to stay deterministic.
std::string tick_label(double v) {
    if (v == 0) return "0";
    const double a = std::fabs(v);
    if (a >= 1e-3 && a < 1e5) {
        const double r = std::round(v * 1e4) / 1e4;
        return format_double(r);
    }
    return format_double(v);
}

}  // namespace

std::string render_box_plot_svg(const std::vector<BoxPlotCategory>& categories, const std::string& title,
                                const std::string& y_label) {
    if (categories.empty()) throw ContractError("box plot: need at least one category");

    const double width = 640, height = 420;
    const double left = 70, right = 20, top = 48, bottom = 46;
    const double plot_w = width - left - right, plot_h = height - top - bottom;

    double lo = categories.front().summary.min, hi = categories.front().summary.max;
    for (const BoxPlotCategory& c : categories) {
        lo = std::min(lo, c.summary.min);
        hi = std::max(hi, c.summary.max);
    }
    if (hi <= lo) hi = lo + 1.0;  // degenerate flat data still renders
    const double pad = 0.05 * (hi - lo);
    lo -= pad;
    hi += pad;

    auto y_of = [&](double v) { return top + plot_h * (1.0 - (v - lo) / (hi - lo)); };

    std::string s;
    s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + format_double(width) + "\" height=\"" +
         format_double(height) + "\" viewBox=\"0 0 " + format_double(width) + " " + format_double(height) +
         "\">\n";
    s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    s += "<text x=\"" + format_double(width / 2) +
         "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">" + title +
         "</text>\n";
    s += "<text x=\"16\" y=\"" + format_double(top + plot_h / 2) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" transform=\"rotate(-90 16 " +
         format_double(top + plot_h / 2) + ")\">" + y_label + "</text>\n";

    // Axes and horizontal grid with 5 ticks.
    s += "<line x1=\"" + format_double(left) + "\" y1=\"" + format_double(top) + "\" x2=\"" +
         format_double(left) + "\" y2=\"" + format_double(top + plot_h) + "\" stroke=\"black\"/>\n";
    s += "<line x1=\"" + format_double(left) + "\" y1=\"" + format_double(top + plot_h) + "\" x2=\"" +
         format_double(left + plot_w) + "\" y2=\"" + format_double(top + plot_h) + "\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        const double v = lo + (hi - lo) * static_cast<double>(i) / 4.0;
        const double y = y_of(v);
        s += "<line x1=\"" + format_double(left - 4) + "\" y1=\"" + format_double(y) + "\" x2=\"" +
             format_double(left + plot_w) + "\" y2=\"" + format_double(y) +
             "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
        s += "<text x=\"" + format_double(left - 8) + "\" y=\"" + format_double(y + 4) +
             "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" + tick_label(v) +
             "</text>\n";
    }

    const double slot = plot_w / static_cast<double>(categories.size());
    const double box_w = std::min(70.0, slot * 0.5);
    for (std::size_t i = 0; i < categories.size(); ++i) {
        const FiveNumberSummary& f = categories[i].summary;
        const double cx = left + slot * (static_cast<double>(i) + 0.5);
        const double x0 = cx - box_w / 2, x1 = cx + box_w / 2;
        // Whiskers with end caps, box q25..q75, median line.
        s += "<line x1=\"" + format_double(cx) + "\" y1=\"" + format_double(y_of(f.min)) + "\" x2=\"" +
             format_double(cx) + "\" y2=\"" + format_double(y_of(f.max)) + "\" stroke=\"black\"/>\n";
        for (const double v : {f.min, f.max})
            s += "<line x1=\"" + format_double(cx - box_w / 4) + "\" y1=\"" + format_double(y_of(v)) +
                 "\" x2=\"" + format_double(cx + box_w / 4) + "\" y2=\"" + format_double(y_of(v)) +
                 "\" stroke=\"black\"/>\n";
        s += "<rect x=\"" + format_double(x0) + "\" y=\"" + format_double(y_of(f.q75)) + "\" width=\"" +
             format_double(x1 - x0) + "\" height=\"" + format_double(y_of(f.q25) - y_of(f.q75)) +
             "\" fill=\"#9ecae1\" stroke=\"black\"/>\n";
        s += "<line x1=\"" + format_double(x0) + "\" y1=\"" + format_double(y_of(f.median)) + "\" x2=\"" +
             format_double(x1) + "\" y2=\"" + format_double(y_of(f.median)) +
             "\" stroke=\"black\" stroke-width=\"2\"/>\n";
        s += "<text x=\"" + format_double(cx) + "\" y=\"" + format_double(top + plot_h + 18) +
             "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" + categories[i].name +
             "</text>\n";
    }
    s += "</svg>\n";
    return s;
}

void write_box_plot_svg(const std::string& path, const std::vector<BoxPlotCategory>& categories,
                        const std::string& title, const std::string& y_label) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("svg '" + path + "': cannot open for writing");
    out << render_box_plot_svg(categories, title, y_label);
    out.flush();
    if (!out) throw IoError("svg '" + path + "': write failed");
}

}  // namespace cycleguard
