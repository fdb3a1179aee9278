#pragma once

#include <string>
#include <vector>

#include "cycleguard/evaluation.hpp"

namespace cycleguard {

struct BoxPlotCategory {
    std::string name;
    FiveNumberSummary summary;
};

// Static five-number box plot (min/q25/median/q75/max whisker boxes), one
// box per category. Pure text output, deterministic for fixed input.
std::string render_box_plot_svg(const std::vector<BoxPlotCategory>& categories, const std::string& title,
                                const std::string& y_label);

void write_box_plot_svg(const std::string& path, const std::vector<BoxPlotCategory>& categories,
                        const std::string& title, const std::string& y_label);

}  // namespace cycleguard
