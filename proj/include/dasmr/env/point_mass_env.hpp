#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "dasmr/core/rng.hpp"
#include "dasmr/env/goal_env.hpp"

namespace dasmr::env {

/// Minimal goal-conditioned environment: a 2-D point mass whose action is a
/// velocity command. Same observation structure as the full simulator
/// (achieved goal first, desired goal second), so the agent, replay, and
/// training driver run on it unchanged. Used to exercise the learning stack
/// end to end in seconds rather than hours.
class PointMassEnv {
public:
    static constexpr int obs_dim = 4;
    static constexpr int goal_dim = 2;
    static constexpr int action_dim = 2;
    static constexpr int achieved_offset = 0;
    static constexpr int desired_offset = 2;

    static constexpr double kStepScale = 0.1;   ///< position change per unit action
    static constexpr double kGoalHalf = 1.0;    ///< goals drawn from [-1, 1]^2
    static constexpr double kPosLimit = 1.5;    ///< position clamp box
    static constexpr double kDth = 0.1;         ///< success threshold
    static constexpr int kMaxSteps = 50;

    explicit PointMassEnv(core::RngStream rng) : rng_(std::move(rng)) {}

    core::RngStream& rng() { return rng_; }
    int max_episode_steps() const { return kMaxSteps; }

    std::vector<double> reset() {
        x_ = y_ = 0.0;
        gx_ = rng_.uniform(-kGoalHalf, kGoalHalf);
        gy_ = rng_.uniform(-kGoalHalf, kGoalHalf);
        step_index_ = 0;
        finished_ = false;
        return observation();
    }

    StepResult step(const std::vector<double>& action) {
        if (action.size() != action_dim)
            throw std::invalid_argument("step: action must have 2 components");
        if (finished_) throw std::logic_error("step: episode finished, call reset()");
        x_ = std::clamp(x_ + kStepScale * std::clamp(action[0], -1.0, 1.0), -kPosLimit, kPosLimit);
        y_ = std::clamp(y_ + kStepScale * std::clamp(action[1], -1.0, 1.0), -kPosLimit, kPosLimit);
        step_index_ += 1;

        StepResult out;
        out.info.distance_to_goal = std::hypot(gx_ - x_, gy_ - y_);
        out.info.closest_distance = 1e9;  // no obstacle
        out.info.out_of_bounds = false;
        out.info.is_success = out.info.distance_to_goal <= kDth;
        const double achieved[2] = {x_, y_};
        const double desired[2] = {gx_, gy_};
        out.reward = compute_reward(achieved, desired, out.info);
        out.terminated = out.info.is_success;
        out.truncated = !out.terminated && step_index_ >= kMaxSteps;
        finished_ = out.terminated || out.truncated;
        out.observation = observation();
        return out;
    }

    double compute_reward(const double* achieved, const double* desired,
                          const StepInfo&) const {
        const double dist = std::hypot(desired[0] - achieved[0], desired[1] - achieved[1]);
        return dist <= kDth ? 1.0 : -1.0;
    }

    bool compute_success(const double* achieved, const double* desired) const {
        return std::hypot(desired[0] - achieved[0], desired[1] - achieved[1]) <= kDth;
    }

    bool compute_terminated(const double* achieved, const double* desired,
                            const StepInfo&) const {
        return compute_success(achieved, desired);
    }

    std::vector<double> observation() const { return {x_, y_, gx_, gy_}; }

    std::vector<double> save_state() const {
        return {x_, y_, gx_, gy_, static_cast<double>(step_index_), finished_ ? 1.0 : 0.0};
    }

    void load_state(const std::vector<double>& v) {
        if (v.size() != 6) throw std::invalid_argument("load_state: expected 6 values");
        x_ = v[0];
        y_ = v[1];
        gx_ = v[2];
        gy_ = v[3];
        step_index_ = static_cast<int>(v[4]);
        finished_ = v[5] != 0.0;
    }

private:
    core::RngStream rng_;
    double x_ = 0.0, y_ = 0.0;
    double gx_ = 0.0, gy_ = 0.0;
    int step_index_ = 0;
    bool finished_ = false;
};

static_assert(GoalEnv<PointMassEnv>);

}  // namespace dasmr::env
