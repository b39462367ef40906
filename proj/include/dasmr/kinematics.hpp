#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>

namespace dasmr::kinematics {

/// Geometric and actuation constants of a double-Ackermann platform.
/// Both axles steer; the rear mirrors the front (symmetric configuration),
/// so a single (phi_l, phi_r) pair describes the steering state.
struct RobotParams {
    double wheelbase_L = 0.6;          ///< axle-to-axle distance [m]
    double track_W = 0.5;              ///< left-to-right wheel distance [m]
    double wheel_radius_r = 0.15;      ///< [m]
    double v_max = 1.0;                ///< longitudinal speed limit [m/s]
    double omega_max = 1.0;            ///< yaw-rate limit [rad/s]
    double phi_max = 0.6;              ///< steering angle limit [rad], < pi/2
    double twist_time_constant = 0.15; ///< first-order actuator lag [s]; 0 = ideal

    void validate() const {
        if (wheelbase_L <= 0 || track_W <= 0 || wheel_radius_r <= 0)
            throw std::invalid_argument("RobotParams: lengths must be positive");
        if (v_max <= 0 || omega_max <= 0)
            throw std::invalid_argument("RobotParams: velocity limits must be positive");
        if (phi_max <= 0 || phi_max >= 1.5707963267948966)
            throw std::invalid_argument("RobotParams: phi_max must lie in (0, pi/2)");
        if (twist_time_constant < 0)
            throw std::invalid_argument("RobotParams: twist_time_constant must be >= 0");
    }

    /// Smallest turn radius whose inner-wheel steering angle stays within
    /// phi_max. Curvature commands beyond it are infeasible.
    double min_turn_radius() const {
        return track_W / 2.0 + (wheelbase_L / 2.0) / std::tan(phi_max);
    }
};

/// Chassis-center velocity command: longitudinal speed and yaw rate.
struct ChassisTwist {
    double v = 0.0;        ///< [m/s]
    double omega_c = 0.0;  ///< [rad/s]
};

/// Per-side wheel state. Signs: positive spin drives the robot toward +v;
/// steering angles follow the signed-radius convention (R > 0 = left turn,
/// ICR on the +y side of the robot frame).
struct WheelState {
    double phi_l = 0.0, phi_r = 0.0;          ///< steering angles [rad]
    double omega_l = 0.0, omega_r = 0.0;      ///< spin speeds [rad/s]
    double phi_dot_l = 0.0, phi_dot_r = 0.0;  ///< steering velocities [rad/s]
};

struct SteeringAngles {
    double phi_l = 0.0;
    double phi_r = 0.0;
    bool clamped = false;  ///< set when the unclamped angle exceeded phi_max
};

/// Signed radius to the instantaneous center of rotation, R = v / omega_c.
/// Straight-line motion (omega_c = 0) has no finite ICR and returns nullopt.
inline std::optional<double> icr_radius(const ChassisTwist& t) {
    if (t.omega_c == 0.0) return std::nullopt;
    return t.v / t.omega_c;
}

/// Steering angles for a commanded twist:
///   phi_l = atan((L/2) / (R - W/2)),  phi_r = atan((L/2) / (R + W/2))
/// and both zero for straight-line motion. Angles beyond phi_max are clamped
/// and flagged; callers that need feasibility restrict the twist instead.
inline SteeringAngles steering_angles(const ChassisTwist& t, const RobotParams& p) {
    SteeringAngles out;
    const auto R = icr_radius(t);
    if (!R) return out;
    out.phi_l = std::atan((p.wheelbase_L / 2.0) / (*R - p.track_W / 2.0));
    out.phi_r = std::atan((p.wheelbase_L / 2.0) / (*R + p.track_W / 2.0));
    auto clamp = [&](double phi) {
        if (std::abs(phi) > p.phi_max) {
            out.clamped = true;
            return std::copysign(p.phi_max, phi);
        }
        return phi;
    };
    out.phi_l = clamp(out.phi_l);
    out.phi_r = clamp(out.phi_r);
    return out;
}

/// Distances from the left/right wheels to the ICR at signed radius R:
///   R_l = sqrt((R - W/2)^2 + (L/2)^2),  R_r = sqrt((R + W/2)^2 + (L/2)^2).
/// Both are unsigned distances, >= L/2.
struct WheelRadii {
    double R_l = 0.0;
    double R_r = 0.0;
};

inline WheelRadii wheel_icr_radii(double R, const RobotParams& p) {
    const double half_L = p.wheelbase_L / 2.0;
    const double half_W = p.track_W / 2.0;
    return {std::hypot(R - half_W, half_L), std::hypot(R + half_W, half_L)};
}

/// Wheel spin speeds. On an arc, each wheel covers its own ICR circle at the
/// chassis yaw rate: |omega_wheel| = |omega_c| * R_wheel / r. The sign(R)
/// factor keeps spin direction aligned with the direction of travel (a right
/// turn at forward speed still spins the wheels forward).
struct WheelSpeeds {
    double omega_l = 0.0;
    double omega_r = 0.0;
};

inline WheelSpeeds wheel_speeds(const ChassisTwist& t, const RobotParams& p) {
    const auto R = icr_radius(t);
    if (!R) {
        const double w = t.v / p.wheel_radius_r;
        return {w, w};
    }
    const auto radii = wheel_icr_radii(*R, p);
    const double s = (*R < 0.0) ? -1.0 : 1.0;
    const double k = t.omega_c / p.wheel_radius_r * s;
    return {k * radii.R_l, k * radii.R_r};
}

/// Full wheel state for a twist, with steering velocities by backward
/// difference against the previous state over dt.
inline WheelState wheel_state_from_twist(const ChassisTwist& t, const WheelState& prev,
                                         double dt, const RobotParams& p) {
    if (dt <= 0) throw std::invalid_argument("wheel_state_from_twist: dt must be positive");
    WheelState ws;
    const auto ang = steering_angles(t, p);
    const auto spd = wheel_speeds(t, p);
    ws.phi_l = ang.phi_l;
    ws.phi_r = ang.phi_r;
    ws.omega_l = spd.omega_l;
    ws.omega_r = spd.omega_r;
    ws.phi_dot_l = (ws.phi_l - prev.phi_l) / dt;
    ws.phi_dot_r = (ws.phi_r - prev.phi_r) / dt;
    return ws;
}

/// Inverse map, used as a test oracle: recover (v, omega_c) from a wheel
/// state. Reconstructs R independently from each steering angle and each
/// wheel speed and cross-checks them.
inline ChassisTwist twist_from_wheel_state(const WheelState& ws, const RobotParams& p,
                                           double rel_tol = 1e-6) {
    const double half_L = p.wheelbase_L / 2.0;
    const double half_W = p.track_W / 2.0;
    auto mismatch = [&](double a, double b) {
        return std::abs(a - b) > rel_tol * std::max({1.0, std::abs(a), std::abs(b)});
    };

    // Straight line: both steering angles zero, equal wheel speeds.
    if (ws.phi_l == 0.0 && ws.phi_r == 0.0) {
        if (mismatch(ws.omega_l, ws.omega_r))
            throw std::runtime_error("inconsistent wheel state: unequal speeds at zero steering");
        return {ws.omega_l * p.wheel_radius_r, 0.0};
    }
    if (std::abs(ws.phi_l) >= 1.5707963267948966)
        throw std::invalid_argument("twist_from_wheel_state: |phi_l| must be < pi/2");

    const double R_from_l = half_W + half_L / std::tan(ws.phi_l);
    const double R_from_r = -half_W + half_L / std::tan(ws.phi_r);
    if (mismatch(R_from_l, R_from_r))
        throw std::runtime_error("inconsistent wheel state: steering angles disagree on R");
    const double R = 0.5 * (R_from_l + R_from_r);

    const auto radii = wheel_icr_radii(R, p);
    const double s = (R < 0.0) ? -1.0 : 1.0;
    const double w_from_l = ws.omega_l * p.wheel_radius_r / (radii.R_l * s);
    const double w_from_r = ws.omega_r * p.wheel_radius_r / (radii.R_r * s);
    if (mismatch(w_from_l, w_from_r))
        throw std::runtime_error("inconsistent wheel state: wheel speeds disagree on omega");
    const double omega_c = 0.5 * (w_from_l + w_from_r);
    return {omega_c * R, omega_c};
}

}  // namespace dasmr::kinematics
