#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "dasmr/core/rng.hpp"
#include "dasmr/env/dasmr_env.hpp"
#include "dasmr/eval/metrics.hpp"
#include "dasmr/eval/shortest_path.hpp"
#include "dasmr/io/trace.hpp"

namespace dasmr::eval {

enum class SeedMode { seen, unseen };

inline const char* seed_mode_name(SeedMode m) { return m == SeedMode::seen ? "seen" : "unseen"; }

/// Salt XORed into the run seed for unseen-mode goal sampling.
inline constexpr std::uint64_t kUnseenSalt = 0x5ee0'5eed'0000'0001ULL;

struct EvalOptions {
    int episodes = 100;
    SeedMode seed_mode = SeedMode::seen;
    std::uint64_t run_seed = 9527;
};

struct EvalOutcome {
    EvalMetrics metrics;
    std::vector<EpisodeResult> episodes;
};

/// Center-path clearance radius for the shortest-path reference: obstacle
/// radius plus half the footprint width.
inline double inflation_radius(const env::WorldConfig& w) {
    return w.obstacle_radius + w.footprint_width / 2.0;
}

/// Shortest-path reference for one episode. Goals sampled close to the
/// obstacle can fall inside the inflated disc; the inflation is then shrunk
/// to keep the endpoint reachable, which only makes the SPL reference
/// stricter for those episodes.
inline double episode_shortest_path(double sx, double sy, double gx, double gy,
                                    const env::WorldConfig& w) {
    const double ds = std::hypot(sx - w.obstacle_x, sy - w.obstacle_y);
    const double dg = std::hypot(gx - w.obstacle_x, gy - w.obstacle_y);
    const double rho =
        std::max(0.0, std::min({inflation_radius(w), ds - 1e-6, dg - 1e-6}));
    return shortest_path_length(sx, sy, gx, gy, w.obstacle_x, w.obstacle_y, rho);
}

/// Rolls one full episode of `env` under `policy` (a callable mapping an
/// observation vector to an action vector), recording a trace row per step.
/// A non-null goal_override replaces the sampled goal before the first step.
template <typename EnvT, typename Policy>
EpisodeResult run_episode(EnvT& env, Policy&& policy, const double* goal_override = nullptr) {
    EpisodeResult res;
    std::vector<double> obs = env.reset();
    if (goal_override) {
        env.set_goal(goal_override[0], goal_override[1]);
        obs = env.observation();
    }
    const auto& w = env.world();
    const auto& s0 = env.state();
    res.goal_x = s0.x_d;
    res.goal_y = s0.y_d;
    const double sx = s0.x_c, sy = s0.y_c;

    io::TraceRow row;
    row.closest_distance = env::closest_distance(s0.x_c, s0.y_c, s0.theta_c, w);
    row.x_c = s0.x_c;
    row.y_c = s0.y_c;
    row.theta_c = s0.theta_c;
    res.trajectory.push_back(row);

    double px = s0.x_c, py = s0.y_c;
    bool done = std::hypot(res.goal_x - px, res.goal_y - py) <= w.d_th;
    res.success = done;  // goal within threshold of the start: success at step 0
    int step = 0;
    while (!done) {
        const std::vector<double> action = policy(obs);
        const env::StepResult sr = env.step(action);
        obs = sr.observation;
        step += 1;
        const auto& st = env.state();
        res.path_length += std::hypot(st.x_c - px, st.y_c - py);
        px = st.x_c;
        py = st.y_c;

        io::TraceRow r;
        r.step = step;
        r.time_s = step * w.dt;
        r.x_c = st.x_c;
        r.y_c = st.y_c;
        r.theta_c = st.theta_c;
        r.v = st.twist.v;
        r.omega_c = st.twist.omega_c;
        r.phi_l = st.wheels.phi_l;
        r.phi_r = st.wheels.phi_r;
        r.reward = sr.reward;
        r.closest_distance = sr.info.closest_distance;
        res.trajectory.push_back(r);

        if (sr.terminated || sr.truncated) {
            res.success = sr.info.is_success;
            done = true;
        }
    }
    res.final_error = std::hypot(res.goal_x - px, res.goal_y - py);
    res.shortest_path = episode_shortest_path(sx, sy, res.goal_x, res.goal_y, w);
    return res;
}

/// Deterministic evaluation over fresh episodes. Seen mode replays the
/// training goal stream from its start; unseen mode uses an independent
/// stream obtained by salting the run seed.
template <typename Policy>
EvalOutcome run_eval(Policy&& policy, const env::WorldConfig& world,
                     const kinematics::RobotParams& robot, const EvalOptions& opt) {
    if (opt.episodes < 1) throw std::invalid_argument("run_eval: episodes must be >= 1");
    const std::uint64_t seed =
        opt.seed_mode == SeedMode::seen ? opt.run_seed : (opt.run_seed ^ kUnseenSalt);
    env::DasmrEnv env(world, robot, core::RngStream(core::substream_seed(seed, "env")));
    EvalOutcome out;
    for (int e = 0; e < opt.episodes; ++e) out.episodes.push_back(run_episode(env, policy));
    out.metrics = aggregate(out.episodes, seed_mode_name(opt.seed_mode));
    return out;
}

}  // namespace dasmr::eval
