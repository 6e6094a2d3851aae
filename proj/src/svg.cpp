#include "afd/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "afd/errors.hpp"

namespace afd {

namespace {

const char* kPalette[] = {"#1b6ca8", "#d94f30", "#3a9a5c", "#8e5bb5", "#c8a227", "#565656", "#1ba8a0", "#b03060"};

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

}  // namespace

std::string render_line_plot(const std::string& title, const std::string& x_label, const std::string& y_label,
                             const std::vector<PlotSeries>& series, int width, int height) {
    if (series.empty()) throw InputError("render_line_plot: no series");
    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (const PlotSeries& s : series) {
        if (s.xs.size() != s.ys.size()) throw InputError("render_line_plot: xs/ys length mismatch");
        for (size_t i = 0; i < s.xs.size(); ++i) {
            xmin = std::min(xmin, s.xs[i]);
            xmax = std::max(xmax, s.xs[i]);
            ymin = std::min(ymin, s.ys[i]);
            ymax = std::max(ymax, s.ys[i]);
        }
    }
    if (xmax <= xmin) xmax = xmin + 1.0;
    if (ymax <= ymin) ymax = ymin + 1.0;
    const double pad_y = 0.06 * (ymax - ymin);
    ymin -= pad_y;
    ymax += pad_y;

    const int ml = 64, mr = 16, mt = 34, mb = 44;
    const double pw = width - ml - mr;
    const double ph = height - mt - mb;
    auto px = [&](double x) { return ml + pw * (x - xmin) / (xmax - xmin); };
    auto py = [&](double y) { return mt + ph * (1.0 - (y - ymin) / (ymax - ymin)); };

    std::string out;
    out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(width) + "\" height=\"" +
           std::to_string(height) + "\" viewBox=\"0 0 " + std::to_string(width) + " " + std::to_string(height) +
           "\">\n";
    out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out += "<text x=\"" + std::to_string(width / 2) + "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" +
           title + "</text>\n";

    // axes with 5 ticks each
    out += "<g stroke=\"#cccccc\" stroke-width=\"1\" font-size=\"10\">\n";
    for (int i = 0; i <= 4; ++i) {
        const double xv = xmin + (xmax - xmin) * i / 4.0;
        const double yv = ymin + (ymax - ymin) * i / 4.0;
        out += "<line x1=\"" + fmt(px(xv)) + "\" y1=\"" + std::to_string(mt) + "\" x2=\"" + fmt(px(xv)) +
               "\" y2=\"" + std::to_string(mt + static_cast<int>(ph)) + "\"/>\n";
        out += "<line x1=\"" + std::to_string(ml) + "\" y1=\"" + fmt(py(yv)) + "\" x2=\"" +
               std::to_string(ml + static_cast<int>(pw)) + "\" y2=\"" + fmt(py(yv)) + "\"/>\n";
        out += "<text x=\"" + fmt(px(xv)) + "\" y=\"" + std::to_string(height - mb + 16) +
               "\" text-anchor=\"middle\" stroke=\"none\" fill=\"#333333\">" + fmt(xv) + "</text>\n";
        out += "<text x=\"" + std::to_string(ml - 6) + "\" y=\"" + fmt(py(yv) + 3) +
               "\" text-anchor=\"end\" stroke=\"none\" fill=\"#333333\">" + fmt(yv) + "</text>\n";
    }
    out += "</g>\n";
    out += "<text x=\"" + std::to_string(width / 2) + "\" y=\"" + std::to_string(height - 8) +
           "\" text-anchor=\"middle\" font-size=\"11\">" + x_label + "</text>\n";
    out += "<text x=\"14\" y=\"" + std::to_string(height / 2) + "\" text-anchor=\"middle\" font-size=\"11\" " +
           "transform=\"rotate(-90 14 " + std::to_string(height / 2) + ")\">" + y_label + "</text>\n";

    for (size_t s = 0; s < series.size(); ++s) {
        const char* color = kPalette[s % (sizeof(kPalette) / sizeof(kPalette[0]))];
        std::string points;
        for (size_t i = 0; i < series[s].xs.size(); ++i) {
            points += fmt(px(series[s].xs[i])) + "," + fmt(py(series[s].ys[i])) + " ";
        }
        out += "<polyline fill=\"none\" stroke=\"" + std::string(color) + "\" stroke-width=\"1.5\" points=\"" +
               points + "\"/>\n";
        out += "<text x=\"" + std::to_string(ml + 8) + "\" y=\"" + std::to_string(mt + 14 + 14 * static_cast<int>(s)) +
               "\" font-size=\"11\" fill=\"" + color + "\">" + series[s].label + "</text>\n";
    }
    out += "</svg>\n";
    return out;
}

void write_line_plot(const std::string& path, const std::string& title, const std::string& x_label,
                     const std::string& y_label, const std::vector<PlotSeries>& series) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw InputError("cannot write plot: " + path);
    os << render_line_plot(title, x_label, y_label, series);
}

}  // namespace afd
