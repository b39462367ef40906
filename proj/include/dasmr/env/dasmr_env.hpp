#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "dasmr/core/rng.hpp"
#include "dasmr/env/goal_env.hpp"
#include "dasmr/kinematics.hpp"

namespace dasmr::env {

/// Workspace, obstacle, goal sampling, and reward constants.
struct WorldConfig {
    double workspace_half = 4.0;        ///< square workspace [-h, h]^2 [m]
    double obstacle_x = 0.0;            ///< obstacle disc center [m]
    double obstacle_y = 0.8;
    double obstacle_radius = 0.30;      ///< [m]
    double goal_x_min = -2.0;           ///< goal sampling box [m]
    double goal_x_max = 2.0;
    double goal_y_min = 0.8;
    double goal_y_max = 2.0;
    double d_th = 0.15;                 ///< success distance threshold [m]
    double dt = 0.025;                  ///< control period [s], 40 Hz
    int max_steps = 800;                ///< episode truncation limit
    double collision_margin = 0.05;     ///< clearance below which -10 applies [m]
    double footprint_length = 0.90;     ///< robot rectangle along heading [m]
    double footprint_width = 0.65;      ///< robot rectangle across heading [m]
    bool dense_reward = false;          ///< baseline mode: -distance instead of -1/+1
    bool collision_terminates = false;  ///< end episodes on the -10 proximity event

    void validate() const {
        if (workspace_half <= 0 || obstacle_radius <= 0 || d_th <= 0 || dt <= 0)
            throw std::invalid_argument("WorldConfig: positive lengths/periods required");
        if (max_steps < 1) throw std::invalid_argument("WorldConfig: max_steps must be >= 1");
        if (goal_x_min > goal_x_max || goal_y_min > goal_y_max)
            throw std::invalid_argument("WorldConfig: empty goal box");
        if (std::abs(goal_x_min) > workspace_half || std::abs(goal_x_max) > workspace_half ||
            std::abs(goal_y_min) > workspace_half || std::abs(goal_y_max) > workspace_half)
            throw std::invalid_argument("WorldConfig: goal box leaves the workspace");
        if (footprint_length <= 0 || footprint_width <= 0)
            throw std::invalid_argument("WorldConfig: footprint must be positive");
    }
};

/// Full simulated robot state.
struct SimState {
    double x_c = 0.0, y_c = 0.0;  ///< chassis center [m]
    double theta_c = 0.0;         ///< heading [rad]
    kinematics::ChassisTwist twist;
    kinematics::WheelState wheels;
    double x_d = 0.0, y_d = 0.0;  ///< desired goal [m]
    int step_index = 0;
    bool finished = false;
};

/// Signed clearance between an oriented rectangle footprint and a disc.
/// Negative values measure penetration depth.
inline double closest_distance(double x_c, double y_c, double theta_c, const WorldConfig& w) {
    const double dx = w.obstacle_x - x_c;
    const double dy = w.obstacle_y - y_c;
    const double c = std::cos(theta_c), s = std::sin(theta_c);
    const double bx = c * dx + s * dy;   // obstacle center in the body frame
    const double by = -s * dx + c * dy;
    const double qx = std::abs(bx) - w.footprint_length / 2.0;
    const double qy = std::abs(by) - w.footprint_width / 2.0;
    const double outside = std::hypot(std::max(qx, 0.0), std::max(qy, 0.0));
    const double inside = std::min(std::max(qx, qy), 0.0);
    return outside + inside - w.obstacle_radius;
}

inline bool in_workspace(double x, double y, const WorldConfig& w) {
    return std::abs(x) <= w.workspace_half && std::abs(y) <= w.workspace_half;
}

/// Goal-conditioned episodic simulation of the steering platform.
///
/// Observation layout (16 scalars):
///   [0] x_c   [1] y_c    [2] x_d      [3] y_d      [4] theta_c
///   [5] w_l   [6] w_r    [7] phi_l    [8] phi_r    [9] phidot_l  [10] phidot_r
///   [11] xdot [12] ydot  [13] omega_c [14] x_obs   [15] y_obs
/// Achieved goal = slots 0-1, desired goal = slots 2-3.
class DasmrEnv {
public:
    static constexpr int obs_dim = 16;
    static constexpr int goal_dim = 2;
    static constexpr int action_dim = 2;
    static constexpr int achieved_offset = 0;
    static constexpr int desired_offset = 2;

    DasmrEnv(WorldConfig world, kinematics::RobotParams robot, core::RngStream rng)
        : world_(world), robot_(robot), rng_(std::move(rng)) {
        world_.validate();
        robot_.validate();
    }

    const WorldConfig& world() const { return world_; }
    const kinematics::RobotParams& robot() const { return robot_; }
    const SimState& state() const { return state_; }
    core::RngStream& rng() { return rng_; }
    int max_episode_steps() const { return world_.max_steps; }

    std::vector<double> reset() {
        state_ = SimState{};
        state_.x_d = rng_.uniform(world_.goal_x_min, world_.goal_x_max);
        state_.y_d = rng_.uniform(world_.goal_y_min, world_.goal_y_max);
        return observation();
    }

    /// Replaces the sampled goal; intended for scripted rollouts right after
    /// reset.
    void set_goal(double x, double y) {
        if (!in_workspace(x, y, world_))
            throw std::invalid_argument("set_goal: goal outside workspace");
        state_.x_d = x;
        state_.y_d = y;
    }

    StepResult step(const std::vector<double>& action) {
        if (action.size() != action_dim)
            throw std::invalid_argument("step: action must have 2 components");
        if (state_.finished)
            throw std::logic_error("step: episode finished, call reset()");

        const double a_v = std::clamp(action[0], -1.0, 1.0);
        const double a_w = std::clamp(action[1], -1.0, 1.0);
        kinematics::ChassisTwist cmd{a_v * robot_.v_max, a_w * robot_.omega_max};
        clamp_curvature(cmd);

        // First-order actuator lag toward the command; 0 time constant snaps.
        if (robot_.twist_time_constant > 0.0) {
            const double alpha = 1.0 - std::exp(-world_.dt / robot_.twist_time_constant);
            state_.twist.v += alpha * (cmd.v - state_.twist.v);
            state_.twist.omega_c += alpha * (cmd.omega_c - state_.twist.omega_c);
            clamp_curvature(state_.twist);  // lag mixes v and omega independently
        } else {
            state_.twist = cmd;
        }

        integrate_pose(state_.twist);
        state_.wheels =
            kinematics::wheel_state_from_twist(state_.twist, state_.wheels, world_.dt, robot_);
        state_.step_index += 1;

        StepResult out;
        out.info = make_info();
        const double achieved[2] = {state_.x_c, state_.y_c};
        const double desired[2] = {state_.x_d, state_.y_d};
        out.reward = compute_reward(achieved, desired, out.info);
        out.terminated = out.info.is_success || out.info.out_of_bounds ||
                         (world_.collision_terminates &&
                          out.info.closest_distance < world_.collision_margin);
        out.truncated = !out.terminated && state_.step_index >= world_.max_steps;
        state_.finished = out.terminated || out.truncated;
        out.observation = observation();
        return out;
    }

    /// Reward as a pure function of goals and stored diagnostics, so replay
    /// relabeling reproduces it exactly. Case precedence:
    /// out-of-bounds (-100) > success (+1) > proximity (-10) > step (-1).
    /// Dense mode replaces the +1/-1 cases with -distance.
    double compute_reward(const double* achieved, const double* desired,
                          const StepInfo& info) const {
        const double dist = std::hypot(desired[0] - achieved[0], desired[1] - achieved[1]);
        if (info.out_of_bounds) return -100.0;
        if (world_.dense_reward) {
            if (info.closest_distance < world_.collision_margin) return -10.0;
            return -dist;
        }
        if (dist <= world_.d_th) return 1.0;
        if (info.closest_distance < world_.collision_margin) return -10.0;
        return -1.0;
    }

    bool compute_success(const double* achieved, const double* desired) const {
        return std::hypot(desired[0] - achieved[0], desired[1] - achieved[1]) <= world_.d_th;
    }

    bool compute_terminated(const double* achieved, const double* desired,
                            const StepInfo& info) const {
        return compute_success(achieved, desired) || info.out_of_bounds ||
               (world_.collision_terminates && info.closest_distance < world_.collision_margin);
    }

    std::vector<double> observation() const {
        const SimState& s = state_;
        return {s.x_c,
                s.y_c,
                s.x_d,
                s.y_d,
                s.theta_c,
                s.wheels.omega_l,
                s.wheels.omega_r,
                s.wheels.phi_l,
                s.wheels.phi_r,
                s.wheels.phi_dot_l,
                s.wheels.phi_dot_r,
                s.twist.v * std::cos(s.theta_c),
                s.twist.v * std::sin(s.theta_c),
                s.twist.omega_c,
                world_.obstacle_x,
                world_.obstacle_y};
    }

    // Checkpoint support: the full mutable state as a flat double array plus
    // the RNG stream text.
    std::vector<double> save_state() const {
        return {state_.x_c,
                state_.y_c,
                state_.theta_c,
                state_.twist.v,
                state_.twist.omega_c,
                state_.wheels.phi_l,
                state_.wheels.phi_r,
                state_.wheels.omega_l,
                state_.wheels.omega_r,
                state_.wheels.phi_dot_l,
                state_.wheels.phi_dot_r,
                state_.x_d,
                state_.y_d,
                static_cast<double>(state_.step_index),
                state_.finished ? 1.0 : 0.0};
    }

    void load_state(const std::vector<double>& v) {
        if (v.size() != 15) throw std::invalid_argument("load_state: expected 15 values");
        state_.x_c = v[0];
        state_.y_c = v[1];
        state_.theta_c = v[2];
        state_.twist.v = v[3];
        state_.twist.omega_c = v[4];
        state_.wheels.phi_l = v[5];
        state_.wheels.phi_r = v[6];
        state_.wheels.omega_l = v[7];
        state_.wheels.omega_r = v[8];
        state_.wheels.phi_dot_l = v[9];
        state_.wheels.phi_dot_r = v[10];
        state_.x_d = v[11];
        state_.y_d = v[12];
        state_.step_index = static_cast<int>(v[13]);
        state_.finished = v[14] != 0.0;
    }

private:
    /// Yaw rates that would need steering beyond phi_max are clamped to the
    /// tightest feasible arc, |omega| <= |v| / R_min. Turning in place is
    /// infeasible for this steering geometry, so v = 0 forces omega = 0.
    void clamp_curvature(kinematics::ChassisTwist& t) const {
        const double w_lim = std::abs(t.v) / robot_.min_turn_radius();
        t.omega_c = std::clamp(t.omega_c, -w_lim, w_lim);
    }

    /// Constant-twist pose update over dt: the chassis moves along the exact
    /// circular arc about the ICR (straight segment when omega is tiny).
    void integrate_pose(const kinematics::ChassisTwist& t) {
        const double dt = world_.dt;
        if (std::abs(t.omega_c) < 1e-9) {
            state_.x_c += t.v * std::cos(state_.theta_c) * dt;
            state_.y_c += t.v * std::sin(state_.theta_c) * dt;
            state_.theta_c += t.omega_c * dt;
            return;
        }
        const double R = t.v / t.omega_c;
        const double th0 = state_.theta_c;
        const double th1 = th0 + t.omega_c * dt;
        state_.x_c += R * (std::sin(th1) - std::sin(th0));
        state_.y_c += R * (std::cos(th0) - std::cos(th1));
        state_.theta_c = th1;
    }

    StepInfo make_info() const {
        StepInfo info;
        info.distance_to_goal = std::hypot(state_.x_d - state_.x_c, state_.y_d - state_.y_c);
        info.closest_distance = closest_distance(state_.x_c, state_.y_c, state_.theta_c, world_);
        info.out_of_bounds = !in_workspace(state_.x_c, state_.y_c, world_);
        info.is_success = info.distance_to_goal <= world_.d_th;
        return info;
    }

    WorldConfig world_;
    kinematics::RobotParams robot_;
    core::RngStream rng_;
    SimState state_;
};

static_assert(GoalEnv<DasmrEnv>);

}  // namespace dasmr::env
