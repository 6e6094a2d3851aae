#pragma once

#include <string>
#include <vector>

namespace afd {

struct PlotSeries {
    std::string label;
    std::vector<double> xs;
    std::vector<double> ys;
};

// Minimal deterministic SVG line plot: fixed palette, fixed formatting,
// byte-identical output for identical input.
std::string render_line_plot(const std::string& title, const std::string& x_label, const std::string& y_label,
                             const std::vector<PlotSeries>& series, int width = 720, int height = 420);

void write_line_plot(const std::string& path, const std::string& title, const std::string& x_label,
                     const std::string& y_label, const std::vector<PlotSeries>& series);

}  // namespace afd
