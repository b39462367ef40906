#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dasmr::eval {

/// Minimum distance from point p to the segment a-b.
inline double point_segment_distance(double px, double py, double ax, double ay, double bx,
                                     double by) {
    const double vx = bx - ax, vy = by - ay;
    const double wx = px - ax, wy = py - ay;
    const double vv = vx * vx + vy * vy;
    double t = vv > 0.0 ? (wx * vx + wy * vy) / vv : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    return std::hypot(px - (ax + t * vx), py - (ay + t * vy));
}

/// Length of the shortest collision-free path from start to goal around one
/// disc of radius rho. If the straight segment clears the disc it is optimal;
/// otherwise the optimum is tangent line, arc along the disc, tangent line,
/// on whichever side is shorter:
///   L = sqrt(ds^2 - rho^2) + sqrt(dg^2 - rho^2)
///     + rho * (delta - acos(rho/ds) - acos(rho/dg))
/// where ds, dg are the distances of start/goal to the center and delta is
/// the angle they subtend there. Endpoints inside the disc are an error.
inline double shortest_path_length(double sx, double sy, double gx, double gy, double cx,
                                   double cy, double rho) {
    if (rho < 0.0) throw std::invalid_argument("shortest_path_length: negative radius");
    const double ds = std::hypot(sx - cx, sy - cy);
    const double dg = std::hypot(gx - cx, gy - cy);
    if (ds < rho) throw std::domain_error("shortest_path_length: start inside inflated obstacle");
    if (dg < rho) throw std::domain_error("shortest_path_length: goal inside inflated obstacle");

    const double straight = std::hypot(gx - sx, gy - sy);
    if (rho == 0.0 || point_segment_distance(cx, cy, sx, sy, gx, gy) >= rho) return straight;

    const double dot = (sx - cx) * (gx - cx) + (sy - cy) * (gy - cy);
    const double delta = std::acos(std::clamp(dot / (ds * dg), -1.0, 1.0));
    const double beta_s = std::acos(std::clamp(rho / ds, -1.0, 1.0));
    const double beta_g = std::acos(std::clamp(rho / dg, -1.0, 1.0));
    const double arc = std::max(delta - beta_s - beta_g, 0.0);
    return std::sqrt(std::max(ds * ds - rho * rho, 0.0)) +
           std::sqrt(std::max(dg * dg - rho * rho, 0.0)) + rho * arc;
}

}  // namespace dasmr::eval
