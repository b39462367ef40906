#pragma once

#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "dasmr/io/trace.hpp"

namespace dasmr::io {

/// Renders a trajectory trace as a standalone SVG: workspace square,
/// obstacle disc, start marker, goal dot, and the center path. Output is a
/// pure function of the inputs (fixed canvas, fixed number formatting), so
/// identical traces give byte-identical files.
inline std::string render_trace_svg(const TraceMeta& meta, const std::vector<TraceRow>& rows) {
    if (rows.empty()) throw std::invalid_argument("render_trace_svg: empty trace");
    const double half = meta.workspace_half > 0 ? meta.workspace_half : 4.0;
    const double size = 720.0, margin = 40.0;
    const double canvas = size + 2 * margin;
    auto px = [&](double x) { return margin + (x + half) / (2 * half) * size; };
    auto py = [&](double y) { return margin + (half - y) / (2 * half) * size; };
    auto num = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.2f", v);
        return std::string(buf);
    };

    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(canvas) + "\" height=\"" +
           num(canvas) + "\" viewBox=\"0 0 " + num(canvas) + " " + num(canvas) + "\">\n";
    svg += "<rect x=\"0\" y=\"0\" width=\"" + num(canvas) + "\" height=\"" + num(canvas) +
           "\" fill=\"#ffffff\"/>\n";
    svg += "<rect x=\"" + num(margin) + "\" y=\"" + num(margin) + "\" width=\"" + num(size) +
           "\" height=\"" + num(size) + "\" fill=\"none\" stroke=\"#222222\" stroke-width=\"2\"/>\n";
    if (meta.obstacle_radius > 0) {
        svg += "<circle cx=\"" + num(px(meta.obstacle_x)) + "\" cy=\"" + num(py(meta.obstacle_y)) +
               "\" r=\"" + num(meta.obstacle_radius / (2 * half) * size) +
               "\" fill=\"#6699dd\" stroke=\"#335588\" stroke-width=\"1.5\"/>\n";
    }
    svg += "<polyline fill=\"none\" stroke=\"#117733\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (i) svg += ' ';
        svg += num(px(rows[i].x_c)) + "," + num(py(rows[i].y_c));
    }
    svg += "\"/>\n";
    svg += "<circle cx=\"" + num(px(rows.front().x_c)) + "\" cy=\"" + num(py(rows.front().y_c)) +
           "\" r=\"5\" fill=\"#000000\"/>\n";
    svg += "<circle cx=\"" + num(px(meta.goal_x)) + "\" cy=\"" + num(py(meta.goal_y)) +
           "\" r=\"6\" fill=\"#cc2222\"/>\n";
    svg += "</svg>\n";
    return svg;
}

inline void write_svg_file(const std::string& path, const TraceMeta& meta,
                           const std::vector<TraceRow>& rows) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open plot file for writing: " + path);
    f << render_trace_svg(meta, rows);
    if (!f) throw std::runtime_error("failed writing plot file: " + path);
}

}  // namespace dasmr::io
