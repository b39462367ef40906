#pragma once

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace dasmr::io {

/// One row of a trajectory trace. Row 0 is the initial state (zero command,
/// zero reward); row k > 0 is the state after environment step k.
struct TraceRow {
    int step = 0;
    double time_s = 0.0;
    double x_c = 0.0, y_c = 0.0, theta_c = 0.0;
    double v = 0.0, omega_c = 0.0;
    double phi_l = 0.0, phi_r = 0.0;
    double reward = 0.0;
    double closest_distance = 0.0;
};

/// Scene constants carried in '#' comment lines so a trace is plottable on
/// its own.
struct TraceMeta {
    double goal_x = 0.0, goal_y = 0.0;
    double obstacle_x = 0.0, obstacle_y = 0.0, obstacle_radius = 0.0;
    double workspace_half = 0.0;
};

inline constexpr const char* kTraceHeader =
    "step,time_s,x_c,y_c,theta_c,v,omega_c,phi_l,phi_r,reward,closest_distance";

namespace detail {
inline std::string fmt_g(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}
}  // namespace detail

inline void write_trace(std::ostream& os, const TraceMeta& meta,
                        const std::vector<TraceRow>& rows) {
    using detail::fmt_g;
    os << "# goal " << fmt_g(meta.goal_x) << ' ' << fmt_g(meta.goal_y) << '\n';
    os << "# obstacle " << fmt_g(meta.obstacle_x) << ' ' << fmt_g(meta.obstacle_y) << ' '
       << fmt_g(meta.obstacle_radius) << '\n';
    os << "# workspace_half " << fmt_g(meta.workspace_half) << '\n';
    os << kTraceHeader << '\n';
    for (const TraceRow& r : rows) {
        os << r.step << ',' << fmt_g(r.time_s) << ',' << fmt_g(r.x_c) << ',' << fmt_g(r.y_c)
           << ',' << fmt_g(r.theta_c) << ',' << fmt_g(r.v) << ',' << fmt_g(r.omega_c) << ','
           << fmt_g(r.phi_l) << ',' << fmt_g(r.phi_r) << ',' << fmt_g(r.reward) << ','
           << fmt_g(r.closest_distance) << '\n';
    }
}

inline void write_trace_file(const std::string& path, const TraceMeta& meta,
                             const std::vector<TraceRow>& rows) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open trace file for writing: " + path);
    write_trace(f, meta, rows);
    if (!f) throw std::runtime_error("failed writing trace file: " + path);
}

/// Parses a trace; malformed rows are reported with their 1-based line
/// number. Unknown '#' metadata lines are ignored.
inline std::pair<TraceMeta, std::vector<TraceRow>> read_trace(std::istream& is) {
    TraceMeta meta;
    std::vector<TraceRow> rows;
    std::string line;
    int line_no = 0;
    bool header_seen = false;
    int prev_step = -1;
    while (std::getline(is, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            std::istringstream ls(line.substr(1));
            std::string key;
            ls >> key;
            if (key == "goal")
                ls >> meta.goal_x >> meta.goal_y;
            else if (key == "obstacle")
                ls >> meta.obstacle_x >> meta.obstacle_y >> meta.obstacle_radius;
            else if (key == "workspace_half")
                ls >> meta.workspace_half;
            continue;
        }
        if (!header_seen) {
            if (line != kTraceHeader)
                throw std::runtime_error("trace line " + std::to_string(line_no) +
                                         ": expected header row");
            header_seen = true;
            continue;
        }
        TraceRow r;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream ls(line);
        if (!(ls >> r.step >> r.time_s >> r.x_c >> r.y_c >> r.theta_c >> r.v >> r.omega_c >>
              r.phi_l >> r.phi_r >> r.reward >> r.closest_distance))
            throw std::runtime_error("trace line " + std::to_string(line_no) +
                                     ": malformed row");
        if (r.step <= prev_step)
            throw std::runtime_error("trace line " + std::to_string(line_no) +
                                     ": step numbers must increase");
        prev_step = r.step;
        rows.push_back(r);
    }
    if (!header_seen) throw std::runtime_error("trace: missing header row");
    return {meta, rows};
}

inline std::pair<TraceMeta, std::vector<TraceRow>> read_trace_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open trace file: " + path);
    return read_trace(f);
}

}  // namespace dasmr::io
