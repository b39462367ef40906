#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "dasmr/agent/sac_crossq.hpp"
#include "dasmr/core/rng.hpp"
#include "dasmr/env/goal_env.hpp"
#include "dasmr/io/checkpoint.hpp"
#include "dasmr/replay/her_buffer.hpp"

namespace dasmr::train {

struct LogRecord {
    long env_step = 0;
    long episode = 0;  ///< 1-based count of finished episodes
    double episode_return = 0.0;
    int episode_length = 0;
    double rolling_sr_percent = 0.0;  ///< success rate over the last 100 episodes
    double critic_loss = 0.0;
    double actor_loss = 0.0;
    double alpha_loss = 0.0;
    double alpha = 0.0;
};

struct DriverOptions {
    agent::AgentConfig agent;
    replay::HerConfig her;
    std::uint64_t seed = 9527;
    long total_steps = 300'000;
    int log_every_episodes = 10;
    std::string config_text;  ///< embedded verbatim in checkpoints
    std::function<void(const LogRecord&)> log_sink;
};

/// Serializes agent parameters, optimizer moments, counters, and the policy
/// noise stream into an open checkpoint.
template <typename T>
void save_agent_state(io::CheckpointWriter& w, agent::SacCrossQAgent<T>& a) {
    a.for_each_tensor([&](const std::string& name, nn::Tensor<T>& t) {
        w.add_tensor_f32(name, static_cast<std::uint32_t>(t.rows),
                         static_cast<std::uint32_t>(t.cols), t.data.data());
    });
    const auto counters = a.counters();
    w.add_i64_list("agent.counters", {counters.begin(), counters.end()});
    w.add_text("rng.agent", a.rng().serialize());
}

template <typename T>
void load_agent_state(const io::CheckpointReader& r, agent::SacCrossQAgent<T>& a) {
    a.for_each_tensor([&](const std::string& name, nn::Tensor<T>& t) {
        const auto& rec = r.tensor_f32(name);
        if (static_cast<int>(rec.rows) != t.rows || static_cast<int>(rec.cols) != t.cols)
            throw std::runtime_error("checkpoint: shape mismatch for tensor '" + name + "'");
        for (std::size_t i = 0; i < t.data.size(); ++i) t.data[i] = static_cast<T>(rec.data[i]);
    });
    const auto& c = r.i64_list("agent.counters");
    a.set_counters(std::vector<long>(c.begin(), c.end()));
    a.rng().deserialize(r.text("rng.agent"));
}

/// Sequential training loop binding environment, replay, and agent. Each
/// train_step performs, in order: action selection (uniform before
/// learning_starts), one env step, transition accumulation (episodes enter
/// the buffer when they finish), at most one gradient update, log emission
/// at episode boundaries, and finally the reset for the next episode.
/// Checkpoints capture the complete mutable state, including a half-finished
/// episode, so a resumed run replays bit-identically.
template <typename Env>
    requires env::GoalEnv<Env>
class TrainDriver {
public:
    using Agent = agent::SacCrossQAgent<float>;
    using Buffer = replay::HerBuffer<Env>;
    using Tr = replay::Transition<Env>;

    TrainDriver(Env environment, DriverOptions opt)
        : opt_(std::move(opt)),
          env_(std::move(environment)),
          buffer_(opt_.her, env_),
          agent_(Env::obs_dim, Env::action_dim, opt_.agent,
                 core::RngStream::substream(opt_.seed, "init"),
                 core::RngStream::substream(opt_.seed, "agent")),
          replay_rng_(core::RngStream::substream(opt_.seed, "replay")),
          warmup_rng_(core::RngStream::substream(opt_.seed, "warmup")) {
        if (opt_.total_steps < 1)
            throw std::invalid_argument("TrainDriver: total_steps must be >= 1");
        current_obs_ = env_.reset();
    }

    // buffer_ keeps a pointer into env_, so the driver must stay put.
    TrainDriver(const TrainDriver&) = delete;
    TrainDriver& operator=(const TrainDriver&) = delete;

    Env& environment() { return env_; }
    Agent& agent() { return agent_; }
    Buffer& buffer() { return buffer_; }
    const DriverOptions& options() const { return opt_; }
    long env_steps() const { return env_steps_; }
    long episodes_finished() const { return episode_count_; }
    double rolling_sr_percent() const {
        if (success_window_.empty()) return 0.0;
        double s = 0.0;
        for (int v : success_window_) s += v;
        return 100.0 * s / success_window_.size();
    }

    bool done() const { return env_steps_ >= opt_.total_steps; }

    void train_step() {
        if (done()) throw std::logic_error("train_step: run already finished");

        std::vector<double> action(Env::action_dim);
        if (env_steps_ < opt_.agent.learning_starts) {
            for (double& a : action) a = warmup_rng_.uniform(-1.0, 1.0);
        } else {
            action = agent_.act(current_obs_, /*deterministic=*/false);
        }

        const env::StepResult sr = env_.step(action);
        env_steps_ += 1;

        Tr t;
        for (int j = 0; j < Env::obs_dim; ++j) {
            t.obs[j] = static_cast<float>(current_obs_[j]);
            t.next_obs[j] = static_cast<float>(sr.observation[j]);
        }
        for (int j = 0; j < Env::action_dim; ++j) t.action[j] = static_cast<float>(action[j]);
        t.reward = sr.reward;
        t.terminated = sr.terminated;  // truncation still bootstraps
        for (int g = 0; g < Env::goal_dim; ++g) {
            t.achieved[g] = sr.observation[Env::achieved_offset + g];
            t.desired[g] = current_obs_[Env::desired_offset + g];
        }
        t.info = sr.info;
        t.episode_id = episode_id_;
        t.step_in_episode = static_cast<int>(episode_.size());
        episode_.push_back(t);
        episode_return_ += sr.reward;

        const bool episode_end = sr.terminated || sr.truncated;
        if (episode_end) buffer_.store_episode(episode_);

        if (env_steps_ > opt_.agent.learning_starts && buffer_.size() > 0) {
            const int n = opt_.agent.batch_size;
            Agent::Batch batch;
            batch.obs = nn::Tensor<float>(n, Env::obs_dim);
            batch.act = nn::Tensor<float>(n, Env::action_dim);
            batch.next_obs = nn::Tensor<float>(n, Env::obs_dim);
            batch.reward.resize(n);
            batch.done.resize(n);
            buffer_.sample_into(n, replay_rng_, batch.obs.data.data(), batch.act.data.data(),
                                batch.reward.data(), batch.next_obs.data.data(),
                                batch.done.data());
            const Agent::Losses losses = agent_.update(batch);
            last_critic_loss_ = losses.critic_loss;
            if (losses.actor_updated) {
                last_actor_loss_ = losses.actor_loss;
                last_alpha_loss_ = losses.alpha_loss;
            }
        }

        if (episode_end) {
            success_window_.push_back(sr.info.is_success ? 1 : 0);
            if (success_window_.size() > 100) success_window_.pop_front();
            episode_count_ += 1;
            if (opt_.log_sink && episode_count_ % opt_.log_every_episodes == 0) {
                LogRecord rec;
                rec.env_step = env_steps_;
                rec.episode = episode_count_;
                rec.episode_return = episode_return_;
                rec.episode_length = static_cast<int>(episode_.size());
                rec.rolling_sr_percent = rolling_sr_percent();
                rec.critic_loss = last_critic_loss_;
                rec.actor_loss = last_actor_loss_;
                rec.alpha_loss = last_alpha_loss_;
                rec.alpha = agent_.alpha();
                opt_.log_sink(rec);
            }
            episode_.clear();
            episode_return_ = 0.0;
            episode_id_ += 1;
            current_obs_ = env_.reset();
        } else {
            current_obs_ = sr.observation;
        }
    }

    /// Runs to total_steps; `after_step` (optional) fires after every step,
    /// e.g. for periodic checkpoints.
    void run(const std::function<void(TrainDriver&)>& after_step = nullptr) {
        while (!done()) {
            train_step();
            if (after_step) after_step(*this);
        }
    }

    void save_checkpoint(std::ostream& os) {
        io::CheckpointWriter w(os);
        w.add_text("config", opt_.config_text);
        w.add_i64_list("driver.counters",
                       {env_steps_, episode_count_, static_cast<std::int64_t>(episode_id_)});
        w.add_f64_list("driver.episode_return", {episode_return_});
        w.add_f64_list("driver.last_losses",
                       {last_critic_loss_, last_actor_loss_, last_alpha_loss_});
        w.add_i64_list("driver.success_window",
                       {success_window_.begin(), success_window_.end()});
        w.add_f64_list("driver.current_obs", current_obs_);
        w.add_f64_list("env.state", env_.save_state());
        w.add_text("rng.env", env_.rng().serialize());
        w.add_text("rng.replay", replay_rng_.serialize());
        w.add_text("rng.warmup", warmup_rng_.serialize());
        save_agent_state(w, agent_);
        std::ostringstream buf(std::ios::binary);
        buffer_.save(buf);
        w.add_blob("replay.buffer", buf.str());
        std::ostringstream ep(std::ios::binary);
        io::ckpt_detail::write_pod<std::uint64_t>(ep, episode_.size());
        for (const Tr& t : episode_) Buffer::write_transition(ep, t);
        w.add_blob("replay.inflight", ep.str());
    }

    void load_checkpoint(std::istream& is) {
        io::CheckpointReader r(is);
        const auto& counters = r.i64_list("driver.counters");
        if (counters.size() != 3) throw std::runtime_error("checkpoint: bad driver counters");
        env_steps_ = counters[0];
        episode_count_ = counters[1];
        episode_id_ = static_cast<std::uint64_t>(counters[2]);
        episode_return_ = r.f64_list("driver.episode_return").at(0);
        const auto& losses = r.f64_list("driver.last_losses");
        last_critic_loss_ = losses.at(0);
        last_actor_loss_ = losses.at(1);
        last_alpha_loss_ = losses.at(2);
        success_window_.assign(r.i64_list("driver.success_window").begin(),
                               r.i64_list("driver.success_window").end());
        current_obs_ = r.f64_list("driver.current_obs");
        env_.load_state(r.f64_list("env.state"));
        env_.rng().deserialize(r.text("rng.env"));
        replay_rng_.deserialize(r.text("rng.replay"));
        warmup_rng_.deserialize(r.text("rng.warmup"));
        load_agent_state(r, agent_);
        std::istringstream buf(r.blob("replay.buffer"), std::ios::binary);
        buffer_.load(buf);
        std::istringstream ep(r.blob("replay.inflight"), std::ios::binary);
        const auto n = io::ckpt_detail::read_pod<std::uint64_t>(ep);
        episode_.clear();
        for (std::uint64_t k = 0; k < n; ++k) episode_.push_back(Buffer::read_transition(ep));
    }

private:
    DriverOptions opt_;
    Env env_;
    Buffer buffer_;
    Agent agent_;
    core::RngStream replay_rng_;
    core::RngStream warmup_rng_;

    std::vector<double> current_obs_;
    std::vector<Tr> episode_;
    double episode_return_ = 0.0;
    std::uint64_t episode_id_ = 0;
    long env_steps_ = 0;
    long episode_count_ = 0;
    std::deque<int> success_window_;
    double last_critic_loss_ = 0.0;
    double last_actor_loss_ = 0.0;
    double last_alpha_loss_ = 0.0;
};

}  // namespace dasmr::train
