#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <deque>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "dasmr/core/rng.hpp"
#include "dasmr/env/goal_env.hpp"

namespace dasmr::replay {

/// One stored environment step. Observations are kept in network precision;
/// goals and diagnostics are kept in double so relabeled rewards reproduce
/// the environment's arithmetic exactly.
template <typename Env>
struct Transition {
    std::array<float, Env::obs_dim> obs{};
    std::array<float, Env::action_dim> action{};
    std::array<float, Env::obs_dim> next_obs{};
    double reward = 0.0;
    bool terminated = false;
    std::array<double, Env::goal_dim> achieved{};  ///< goal slots of the next state
    std::array<double, Env::goal_dim> desired{};   ///< episode goal at record time
    env::StepInfo info;
    std::uint64_t episode_id = 0;
    int step_in_episode = 0;
};

struct HerConfig {
    std::size_t capacity = 1'000'000;  ///< in transitions
    int n_sampled_goal = 16;           ///< relabel probability n / (n + 1)
    bool enabled = true;               ///< false: plain replay, no relabeling

    double relabel_probability() const {
        if (!enabled) return 0.0;
        return static_cast<double>(n_sampled_goal) / (n_sampled_goal + 1.0);
    }

    void validate() const {
        if (capacity == 0) throw std::invalid_argument("HerConfig: capacity must be positive");
        if (n_sampled_goal < 1)
            throw std::invalid_argument("HerConfig: n_sampled_goal must be >= 1");
    }
};

/// Sampling metadata surfaced for tests and diagnostics.
struct SampleMeta {
    std::size_t episode_index = 0;  ///< position in the current episode deque
    int step_in_episode = 0;
    bool relabeled = false;
    int future_step = -1;  ///< source step of the substituted goal, -1 if none
};

/// Episode-aware ring buffer with "future"-strategy hindsight relabeling.
/// Episodes are evicted whole, oldest first, so every stored transition can
/// always see its episode's later steps.
template <typename Env>
    requires env::GoalEnv<Env>
class HerBuffer {
public:
    using Tr = Transition<Env>;

    HerBuffer(HerConfig cfg, const Env& reward_env) : cfg_(cfg), env_(&reward_env) {
        cfg_.validate();
    }

    std::size_t size() const { return total_; }
    std::size_t episode_count() const { return episodes_.size(); }
    const HerConfig& config() const { return cfg_; }

    void store_episode(std::vector<Tr> episode) {
        if (episode.empty()) throw std::invalid_argument("store_episode: empty episode");
        for (std::size_t i = 0; i < episode.size(); ++i) {
            if (episode[i].step_in_episode != static_cast<int>(i))
                throw std::invalid_argument("store_episode: step indices must run 0..n-1");
            if (episode[i].episode_id != episode[0].episode_id)
                throw std::invalid_argument("store_episode: mixed episode ids");
        }
        total_ += episode.size();
        episodes_.push_back(std::move(episode));
        while (total_ > cfg_.capacity && episodes_.size() > 1) {
            total_ -= episodes_.front().size();
            episodes_.pop_front();
        }
        rebuild_cumulative();
    }

    /// Uniform sample of n transitions, each independently relabeled with
    /// probability n/(n+1) using the achieved goal of a strictly later step
    /// of the same episode. Episode-final transitions keep their goal.
    /// Outputs are written to caller-owned flat arrays (row-major, n rows);
    /// null pointers are skipped. `meta` (optional) receives one entry per
    /// sample.
    void sample_into(int n, core::RngStream& rng, float* obs, float* act, float* rew,
                     float* next_obs, float* done, std::vector<SampleMeta>* meta = nullptr) const {
        if (total_ == 0) throw std::runtime_error("sample_into: empty buffer");
        if (meta) {
            meta->clear();
            meta->reserve(n);
        }
        const double p = cfg_.relabel_probability();
        for (int k = 0; k < n; ++k) {
            const std::size_t flat = rng.uniform_int(total_);
            const std::size_t e = locate_episode(flat);
            const std::vector<Tr>& ep = episodes_[e];
            const int i = static_cast<int>(flat - cumulative_[e]);
            const Tr& t = ep[i];
            const int last = static_cast<int>(ep.size()) - 1;

            SampleMeta m;
            m.episode_index = e;
            m.step_in_episode = i;

            std::array<double, Env::goal_dim> goal = t.desired;
            double reward = t.reward;
            bool terminated = t.terminated;
            if (i < last && rng.uniform() < p) {
                const int j = i + 1 + static_cast<int>(rng.uniform_int(last - i));
                goal = ep[j].achieved;
                reward = env_->compute_reward(t.achieved.data(), goal.data(), t.info);
                terminated = env_->compute_terminated(t.achieved.data(), goal.data(), t.info);
                m.relabeled = true;
                m.future_step = j;
            }

            if (obs) {
                float* row = obs + static_cast<std::size_t>(k) * Env::obs_dim;
                std::copy(t.obs.begin(), t.obs.end(), row);
                for (int g = 0; g < Env::goal_dim; ++g)
                    row[Env::desired_offset + g] = static_cast<float>(goal[g]);
            }
            if (next_obs) {
                float* row = next_obs + static_cast<std::size_t>(k) * Env::obs_dim;
                std::copy(t.next_obs.begin(), t.next_obs.end(), row);
                for (int g = 0; g < Env::goal_dim; ++g)
                    row[Env::desired_offset + g] = static_cast<float>(goal[g]);
            }
            if (act)
                std::copy(t.action.begin(), t.action.end(),
                          act + static_cast<std::size_t>(k) * Env::action_dim);
            if (rew) rew[k] = static_cast<float>(reward);
            if (done) done[k] = terminated ? 1.0f : 0.0f;
            if (meta) meta->push_back(m);
        }
    }

    const std::vector<Tr>& episode(std::size_t index) const { return episodes_.at(index); }

    static void write_transition(std::ostream& os, const Tr& t) {
        os.write(reinterpret_cast<const char*>(t.obs.data()), sizeof(t.obs));
        os.write(reinterpret_cast<const char*>(t.action.data()), sizeof(t.action));
        os.write(reinterpret_cast<const char*>(t.next_obs.data()), sizeof(t.next_obs));
        write_f64(os, t.reward);
        os.put(t.terminated ? 1 : 0);
        os.write(reinterpret_cast<const char*>(t.achieved.data()), sizeof(t.achieved));
        os.write(reinterpret_cast<const char*>(t.desired.data()), sizeof(t.desired));
        write_f64(os, t.info.distance_to_goal);
        write_f64(os, t.info.closest_distance);
        os.put(t.info.out_of_bounds ? 1 : 0);
        os.put(t.info.is_success ? 1 : 0);
        write_u64(os, t.episode_id);
        write_u64(os, static_cast<std::uint64_t>(t.step_in_episode));
    }

    static Tr read_transition(std::istream& is) {
        Tr t;
        is.read(reinterpret_cast<char*>(t.obs.data()), sizeof(t.obs));
        is.read(reinterpret_cast<char*>(t.action.data()), sizeof(t.action));
        is.read(reinterpret_cast<char*>(t.next_obs.data()), sizeof(t.next_obs));
        t.reward = read_f64(is);
        t.terminated = is.get() != 0;
        is.read(reinterpret_cast<char*>(t.achieved.data()), sizeof(t.achieved));
        is.read(reinterpret_cast<char*>(t.desired.data()), sizeof(t.desired));
        t.info.distance_to_goal = read_f64(is);
        t.info.closest_distance = read_f64(is);
        t.info.out_of_bounds = is.get() != 0;
        t.info.is_success = is.get() != 0;
        t.episode_id = read_u64(is);
        t.step_in_episode = static_cast<int>(read_u64(is));
        return t;
    }

    void save(std::ostream& os) const {
        write_u64(os, episodes_.size());
        for (const auto& ep : episodes_) {
            write_u64(os, ep.size());
            for (const Tr& t : ep) write_transition(os, t);
        }
    }

    void load(std::istream& is) {
        episodes_.clear();
        total_ = 0;
        const std::uint64_t n_ep = read_u64(is);
        for (std::uint64_t e = 0; e < n_ep; ++e) {
            const std::uint64_t n_tr = read_u64(is);
            std::vector<Tr> ep;
            ep.reserve(n_tr);
            for (std::uint64_t k = 0; k < n_tr; ++k) ep.push_back(read_transition(is));
            total_ += ep.size();
            episodes_.push_back(std::move(ep));
        }
        if (!is) throw std::runtime_error("HerBuffer::load: truncated stream");
        rebuild_cumulative();
    }

private:
    void rebuild_cumulative() {
        cumulative_.resize(episodes_.size());
        std::size_t acc = 0;
        for (std::size_t e = 0; e < episodes_.size(); ++e) {
            cumulative_[e] = acc;
            acc += episodes_[e].size();
        }
    }

    std::size_t locate_episode(std::size_t flat) const {
        auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), flat);
        return static_cast<std::size_t>(it - cumulative_.begin()) - 1;
    }

    static void write_u64(std::ostream& os, std::uint64_t v) {
        os.write(reinterpret_cast<const char*>(&v), sizeof(v));
    }
    static void write_f64(std::ostream& os, double v) {
        os.write(reinterpret_cast<const char*>(&v), sizeof(v));
    }
    static std::uint64_t read_u64(std::istream& is) {
        std::uint64_t v = 0;
        is.read(reinterpret_cast<char*>(&v), sizeof(v));
        return v;
    }
    static double read_f64(std::istream& is) {
        double v = 0;
        is.read(reinterpret_cast<char*>(&v), sizeof(v));
        return v;
    }

    HerConfig cfg_;
    const Env* env_;
    std::deque<std::vector<Tr>> episodes_;
    std::vector<std::size_t> cumulative_;
    std::size_t total_ = 0;
};

}  // namespace dasmr::replay
