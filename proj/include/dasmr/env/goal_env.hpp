#pragma once

#include <concepts>
#include <vector>

namespace dasmr::env {

/// Per-step diagnostics. Kept in double precision and stored alongside each
/// transition so goal relabeling can recompute rewards exactly.
struct StepInfo {
    double distance_to_goal = 0.0;  ///< |achieved - desired| at the new state
    double closest_distance = 0.0;  ///< signed body-to-obstacle clearance [m]
    bool out_of_bounds = false;
    bool is_success = false;
};

struct StepResult {
    std::vector<double> observation;
    double reward = 0.0;
    bool terminated = false;  ///< environment-defined end state
    bool truncated = false;   ///< episode hit its step limit
    StepInfo info;
};

/// Goal-conditioned environments expose flat observations with designated
/// achieved-goal and desired-goal slots, and a reward that is a pure function
/// of (achieved, desired, info). HER relies on exactly this structure.
template <typename E>
concept GoalEnv = requires(E e, const E ce, const std::vector<double>& obs,
                           const double* achieved, const double* desired,
                           const StepInfo& info, const std::vector<double>& action) {
    { E::obs_dim } -> std::convertible_to<int>;
    { E::goal_dim } -> std::convertible_to<int>;
    { E::action_dim } -> std::convertible_to<int>;
    { E::achieved_offset } -> std::convertible_to<int>;
    { E::desired_offset } -> std::convertible_to<int>;
    { ce.compute_reward(achieved, desired, info) } -> std::convertible_to<double>;
    { e.reset() } -> std::convertible_to<std::vector<double>>;
    { e.step(action) } -> std::convertible_to<StepResult>;
    { ce.max_episode_steps() } -> std::convertible_to<int>;
};

}  // namespace dasmr::env
