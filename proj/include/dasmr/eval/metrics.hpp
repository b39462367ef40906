#pragma once

#include <cmath>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "dasmr/io/trace.hpp"

namespace dasmr::eval {

struct EpisodeResult {
    bool success = false;
    double final_error = 0.0;    ///< center-to-goal distance at episode end [m]
    double path_length = 0.0;    ///< sum of per-step center displacements [m]
    double shortest_path = 0.0;  ///< collision-free optimum for this goal [m]
    double goal_x = 0.0, goal_y = 0.0;
    std::vector<io::TraceRow> trajectory;
};

struct EvalMetrics {
    double sr_percent = 0.0;
    double ae = 0.0;         ///< mean final error over all episodes
    double sigma = 0.0;      ///< population std of final error, all episodes
    double ae_fail = 0.0;    ///< same pair over failures only (0 when none)
    double sigma_fail = 0.0;
    double spl = 0.0;
    int episodes = 0;
    int successes = 0;
    std::string seed_mode;
};

/// Success weighted by normalized inverse path length:
/// (1/N) * sum_i S_i * l_i / max(p_i, l_i). The degenerate goal-at-start
/// case (l = p = 0) counts as a full contribution.
inline double spl(const std::vector<EpisodeResult>& results) {
    if (results.empty()) return 0.0;
    double acc = 0.0;
    for (const EpisodeResult& r : results) {
        if (!r.success) continue;
        const double denom = std::max(r.path_length, r.shortest_path);
        acc += denom > 0.0 ? r.shortest_path / denom : 1.0;
    }
    return acc / results.size();
}

namespace detail {
inline std::pair<double, double> mean_and_pop_std(const std::vector<double>& xs) {
    if (xs.empty()) return {0.0, 0.0};
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= xs.size();
    double var = 0.0;
    for (double x : xs) var += (x - mean) * (x - mean);
    var /= xs.size();
    return {mean, std::sqrt(var)};
}
}  // namespace detail

/// Mean and population standard deviation of the final errors, over all
/// episodes and over failures only.
inline EvalMetrics aggregate(const std::vector<EpisodeResult>& results,
                             const std::string& seed_mode) {
    EvalMetrics m;
    m.seed_mode = seed_mode;
    m.episodes = static_cast<int>(results.size());
    std::vector<double> all, fails;
    for (const EpisodeResult& r : results) {
        all.push_back(r.final_error);
        if (r.success)
            m.successes += 1;
        else
            fails.push_back(r.final_error);
    }
    if (m.episodes > 0) m.sr_percent = 100.0 * m.successes / m.episodes;
    std::tie(m.ae, m.sigma) = detail::mean_and_pop_std(all);
    std::tie(m.ae_fail, m.sigma_fail) = detail::mean_and_pop_std(fails);
    m.spl = spl(results);
    return m;
}

}  // namespace dasmr::eval
