#pragma once

// Minimal SVG line charts for the report subcommand (loss curves, detection
// timelines). Static files only.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "cmcd/util.hpp"

namespace cmcd::plot {

struct Series {
    std::string name;
    std::string color = "#1f77b4";
    std::vector<double> x;
    std::vector<double> y;
};

struct Band {  // shaded x-interval (e.g. ground-truth contact episodes)
    double x0 = 0.0;
    double x1 = 0.0;
};

struct Chart {
    std::string title;
    std::string x_label;
    std::string y_label;
    std::vector<Series> series;
    std::vector<Band> bands;
    int width = 860;
    int height = 420;
};

inline std::string render_svg(const Chart& chart) {
    const double ml = 64, mr = 16, mt = 34, mb = 44;
    const double pw = chart.width - ml - mr, ph = chart.height - mt - mb;

    double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
    double ymin = xmin, ymax = -xmin;
    for (const auto& s : chart.series) {
        for (double v : s.x) { xmin = std::min(xmin, v); xmax = std::max(xmax, v); }
        for (double v : s.y) { ymin = std::min(ymin, v); ymax = std::max(ymax, v); }
    }
    if (!(xmax > xmin)) { xmin -= 1; xmax += 1; }
    if (!(ymax > ymin)) { ymin -= 1; ymax += 1; }
    const double ypad = 0.05 * (ymax - ymin);
    ymin -= ypad;
    ymax += ypad;

    auto sx = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * pw; };
    auto sy = [&](double y) { return mt + ph - (y - ymin) / (ymax - ymin) * ph; };
    auto f = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.2f", v);
        return std::string(buf);
    };

    std::string svg = "<svg xmlns='http://www.w3.org/2000/svg' width='" +
                      std::to_string(chart.width) + "' height='" + std::to_string(chart.height) +
                      "' font-family='sans-serif' font-size='12'>\n";
    svg += "<rect width='100%' height='100%' fill='white'/>\n";

    for (const auto& b : chart.bands) {
        const double x0 = sx(std::max(b.x0, xmin)), x1 = sx(std::min(b.x1, xmax));
        if (x1 <= x0) continue;
        svg += "<rect x='" + f(x0) + "' y='" + f(mt) + "' width='" + f(x1 - x0) + "' height='" +
               f(ph) + "' fill='#dddddd'/>\n";
    }

    // axes + ticks
    svg += "<line x1='" + f(ml) + "' y1='" + f(mt + ph) + "' x2='" + f(ml + pw) + "' y2='" +
           f(mt + ph) + "' stroke='black'/>\n";
    svg += "<line x1='" + f(ml) + "' y1='" + f(mt) + "' x2='" + f(ml) + "' y2='" + f(mt + ph) +
           "' stroke='black'/>\n";
    for (int i = 0; i <= 5; ++i) {
        const double xv = xmin + (xmax - xmin) * i / 5.0;
        const double yv = ymin + (ymax - ymin) * i / 5.0;
        svg += "<text x='" + f(sx(xv)) + "' y='" + f(mt + ph + 16) + "' text-anchor='middle'>" +
               f(xv) + "</text>\n";
        svg += "<text x='" + f(ml - 6) + "' y='" + f(sy(yv) + 4) + "' text-anchor='end'>" + f(yv) +
               "</text>\n";
    }
    svg += "<text x='" + f(ml + pw / 2) + "' y='" + f(double(chart.height) - 8) +
           "' text-anchor='middle'>" + chart.x_label + "</text>\n";
    svg += "<text x='14' y='" + f(mt + ph / 2) + "' text-anchor='middle' transform='rotate(-90 14 " +
           f(mt + ph / 2) + ")'>" + chart.y_label + "</text>\n";
    svg += "<text x='" + f(ml + pw / 2) + "' y='20' text-anchor='middle' font-size='14'>" +
           chart.title + "</text>\n";

    int li = 0;
    for (const auto& s : chart.series) {
        if (s.x.empty()) continue;
        std::string pts;
        for (std::size_t i = 0; i < s.x.size(); ++i)
            pts += f(sx(s.x[i])) + "," + f(sy(s.y[i])) + " ";
        svg += "<polyline fill='none' stroke='" + s.color + "' stroke-width='1.5' points='" + pts +
               "'/>\n";
        svg += "<text x='" + f(ml + pw - 4) + "' y='" + f(mt + 16 + 16 * li) +
               "' text-anchor='end' fill='" + s.color + "'>" + s.name + "</text>\n";
        ++li;
    }
    svg += "</svg>\n";
    return svg;
}

inline const char* series_color(int i) {
    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                   "#9467bd", "#8c564b", "#17becf", "#7f7f7f"};
    return colors[i % 8];
}

}  // namespace cmcd::plot
