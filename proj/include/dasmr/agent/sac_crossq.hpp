#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "dasmr/core/rng.hpp"
#include "dasmr/nn/adam.hpp"
#include "dasmr/nn/networks.hpp"

namespace dasmr::agent {

struct AgentConfig {
    double gamma = 0.99;
    int batch_size = 256;
    long learning_starts = 1000;  ///< env steps with uniform random actions, no updates
    int policy_delay = 3;         ///< critic updates per actor/alpha update
    double entropy_target = -2.0; ///< -action_dim
    double init_log_alpha = 0.0;
    double lr = 3e-4;
    double adam_beta1 = 0.5;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    std::vector<int> actor_hidden = {256, 256};
    std::vector<int> critic_hidden = {1024, 1024};
    bool batch_norm = true;
    bool renorm = true;
    double bn_momentum = 0.99;
    long renorm_warmup = 10000;

    void validate() const {
        if (gamma <= 0.0 || gamma >= 1.0)
            throw std::invalid_argument("AgentConfig: gamma must lie in (0, 1)");
        if (batch_size < 1) throw std::invalid_argument("AgentConfig: batch_size must be >= 1");
        if (learning_starts < 0 || policy_delay < 1)
            throw std::invalid_argument("AgentConfig: bad scheduling constants");
        if (lr <= 0.0) throw std::invalid_argument("AgentConfig: lr must be positive");
    }
};

/// Soft actor-critic with the target-network-free overlay: twin
/// batch-renormalized critics trained on a single joint forward over the
/// concatenated [(s,a); (s',a')] batch, so normalization statistics mix the
/// on-buffer and bootstrapped action distributions. There are exactly three
/// parameter sets (actor, two critics) and no delayed copies.
template <typename T = float>
class SacCrossQAgent {
public:
    struct Batch {
        nn::Tensor<T> obs;       // [n, obs_dim]
        nn::Tensor<T> act;       // [n, action_dim]
        nn::Tensor<T> next_obs;  // [n, obs_dim]
        std::vector<T> reward;   // [n]
        std::vector<T> done;     // [n], 1 = terminated (no bootstrap)
    };

    struct Losses {
        double critic_loss = 0.0;
        double actor_loss = 0.0;
        double alpha_loss = 0.0;
        double alpha = 0.0;
        bool actor_updated = false;
    };

    SacCrossQAgent(int obs_dim, int action_dim, AgentConfig cfg, core::RngStream init_rng,
                   core::RngStream sample_rng)
        : cfg_(cfg), obs_dim_(obs_dim), action_dim_(action_dim), rng_(std::move(sample_rng)) {
        cfg_.validate();
        nn::MlpSpec<T> actor_spec;
        actor_spec.input_dim = obs_dim;
        actor_spec.hidden = cfg_.actor_hidden;
        actor_spec.batch_norm = cfg_.batch_norm;
        actor_spec.renorm = cfg_.renorm;
        actor_spec.momentum = static_cast<T>(cfg_.bn_momentum);
        actor_spec.renorm_warmup = cfg_.renorm_warmup;
        nn::MlpSpec<T> critic_spec = actor_spec;
        critic_spec.input_dim = obs_dim + action_dim;
        critic_spec.hidden = cfg_.critic_hidden;

        actor_ = nn::Actor<T>(actor_spec, action_dim, init_rng);
        critic1_ = nn::Critic<T>(critic_spec, init_rng);
        critic2_ = nn::Critic<T>(critic_spec, init_rng);
        log_alpha_ = nn::Tensor<T>::full(1, 1, static_cast<T>(cfg_.init_log_alpha));

        actor_grads_ = actor_.make_grads();
        c1_grads_ = critic1_.make_grads();
        c2_grads_ = critic2_.make_grads();

        nn::AdamConfig<T> acfg;
        acfg.lr = static_cast<T>(cfg_.lr);
        acfg.beta1 = static_cast<T>(cfg_.adam_beta1);
        acfg.beta2 = static_cast<T>(cfg_.adam_beta2);
        acfg.eps = static_cast<T>(cfg_.adam_eps);
        opt_actor_ = nn::Adam<T>(acfg);
        opt_c1_ = nn::Adam<T>(acfg);
        opt_c2_ = nn::Adam<T>(acfg);
        opt_alpha_ = nn::Adam<T>(acfg);
        opt_actor_.init(param_list(actor_, actor_grads_).first);
        opt_c1_.init(param_list(critic1_, c1_grads_).first);
        opt_c2_.init(param_list(critic2_, c2_grads_).first);
        opt_alpha_.init({&log_alpha_});
    }

    const AgentConfig& config() const { return cfg_; }
    int obs_dim() const { return obs_dim_; }
    int action_dim() const { return action_dim_; }
    double alpha() const { return std::exp(static_cast<double>(log_alpha_.data[0])); }
    long critic_updates() const { return critic_updates_; }
    long actor_updates() const { return actor_updates_; }
    nn::Actor<T>& actor() { return actor_; }
    nn::Critic<T>& critic1() { return critic1_; }
    nn::Critic<T>& critic2() { return critic2_; }
    nn::Tensor<T>& log_alpha() { return log_alpha_; }
    core::RngStream& rng() { return rng_; }

    /// Policy action for one observation. Deterministic mode is tanh of the
    /// mean head; stochastic mode draws from the squashed Gaussian. Both run
    /// the trunk in eval mode.
    std::vector<double> act(const std::vector<double>& obs, bool deterministic) {
        if (static_cast<int>(obs.size()) != obs_dim_)
            throw std::invalid_argument("act: observation size mismatch");
        nn::Tensor<T> x(1, obs_dim_);
        for (int j = 0; j < obs_dim_; ++j) x(0, j) = static_cast<T>(obs[j]);
        nn::Tensor<T> a;
        if (deterministic) {
            a = actor_.mean_action(x);
        } else {
            nn::Tensor<T> lp;
            actor_.sample(x, /*train_mode=*/false, rng_, a, lp);
        }
        std::vector<double> out(action_dim_);
        for (int j = 0; j < action_dim_; ++j) out[j] = a(0, j);
        return out;
    }

    /// One gradient step on both critics, then an actor+alpha step every
    /// policy_delay critic steps.
    Losses update(const Batch& batch) {
        Losses out;
        out.critic_loss = critic_step(batch);
        critic_updates_ += 1;
        if (critic_updates_ % cfg_.policy_delay == 0) {
            auto [a_loss, al_loss] = actor_alpha_step(batch);
            out.actor_loss = a_loss;
            out.alpha_loss = al_loss;
            out.actor_updated = true;
            actor_updates_ += 1;
        }
        out.alpha = alpha();
        return out;
    }

    /// Critic regression toward y = r + gamma * (1-done) * (minQ' - alpha*logp').
    /// Each critic makes ONE train-mode forward on the 2n joint batch; the
    /// bootstrapped half receives zero upstream gradient (y is a constant).
    double critic_step(const Batch& batch) {
        const int n = batch.obs.rows;
        nn::Tensor<T> a_next, logp_next;
        actor_.sample(batch.next_obs, /*train_mode=*/false, rng_, a_next, logp_next);

        nn::Tensor<T> joint(2 * n, obs_dim_ + action_dim_);
        for (int i = 0; i < n; ++i) {
            T* row = joint.row(i);
            const T* o = batch.obs.row(i);
            const T* a = batch.act.row(i);
            for (int j = 0; j < obs_dim_; ++j) row[j] = o[j];
            for (int j = 0; j < action_dim_; ++j) row[obs_dim_ + j] = a[j];
            T* row2 = joint.row(n + i);
            const T* o2 = batch.next_obs.row(i);
            const T* a2 = a_next.row(i);
            for (int j = 0; j < obs_dim_; ++j) row2[j] = o2[j];
            for (int j = 0; j < action_dim_; ++j) row2[obs_dim_ + j] = a2[j];
        }

        typename nn::Critic<T>::Cache cache1, cache2;
        nn::Tensor<T> q1 = critic1_.forward(joint, /*train_mode=*/true, &cache1);
        nn::Tensor<T> q2 = critic2_.forward(joint, /*train_mode=*/true, &cache2);

        const double a_coef = alpha();
        std::vector<double> y(n);
        for (int i = 0; i < n; ++i) {
            const double qn = std::min(static_cast<double>(q1(n + i, 0)),
                                       static_cast<double>(q2(n + i, 0)));
            const double soft = qn - a_coef * static_cast<double>(logp_next(i, 0));
            y[i] = static_cast<double>(batch.reward[i]) +
                   cfg_.gamma * (1.0 - static_cast<double>(batch.done[i])) * soft;
        }

        double loss = 0.0;
        nn::Tensor<T> dq1(2 * n, 1), dq2(2 * n, 1);
        for (int i = 0; i < n; ++i) {
            const double e1 = static_cast<double>(q1(i, 0)) - y[i];
            const double e2 = static_cast<double>(q2(i, 0)) - y[i];
            loss += (e1 * e1 + e2 * e2) / n;
            dq1(i, 0) = static_cast<T>(2.0 * e1 / n);
            dq2(i, 0) = static_cast<T>(2.0 * e2 / n);
        }
        if (!std::isfinite(loss)) throw std::runtime_error("critic_step: non-finite loss");

        c1_grads_.zero();
        c2_grads_.zero();
        critic1_.backward(cache1, dq1, c1_grads_);
        critic2_.backward(cache2, dq2, c2_grads_);
        auto [p1, g1] = param_list(critic1_, c1_grads_);
        opt_c1_.step(p1, g1);
        auto [p2, g2] = param_list(critic2_, c2_grads_);
        opt_c2_.step(p2, g2);
        return loss;
    }

    /// Actor loss mean(alpha*logp - minQ) with the critics frozen in eval
    /// mode; alpha loss -log_alpha * mean(logp + entropy_target) on detached
    /// log-probabilities.
    std::pair<double, double> actor_alpha_step(const Batch& batch) {
        const int n = batch.obs.rows;
        typename nn::Actor<T>::Cache acache;
        nn::Tensor<T> a_pi, logp;
        actor_.sample(batch.obs, /*train_mode=*/true, rng_, a_pi, logp, &acache);

        nn::Tensor<T> joint(n, obs_dim_ + action_dim_);
        for (int i = 0; i < n; ++i) {
            T* row = joint.row(i);
            const T* o = batch.obs.row(i);
            for (int j = 0; j < obs_dim_; ++j) row[j] = o[j];
            for (int j = 0; j < action_dim_; ++j) row[obs_dim_ + j] = a_pi(i, j);
        }
        typename nn::Critic<T>::Cache cache1, cache2;
        nn::Tensor<T> q1 = critic1_.forward(joint, /*train_mode=*/false, &cache1);
        nn::Tensor<T> q2 = critic2_.forward(joint, /*train_mode=*/false, &cache2);

        const double a_coef = alpha();
        double actor_loss = 0.0;
        nn::Tensor<T> dq1(n, 1), dq2(n, 1);
        for (int i = 0; i < n; ++i) {
            const double m1 = q1(i, 0), m2 = q2(i, 0);
            actor_loss += (a_coef * static_cast<double>(logp(i, 0)) - std::min(m1, m2)) / n;
            if (m1 <= m2)
                dq1(i, 0) = static_cast<T>(-1.0 / n);
            else
                dq2(i, 0) = static_cast<T>(-1.0 / n);
        }
        if (!std::isfinite(actor_loss)) throw std::runtime_error("actor_alpha_step: non-finite loss");

        nn::Tensor<T> din1 = critic1_.backward_input(cache1, dq1);
        nn::Tensor<T> din2 = critic2_.backward_input(cache2, dq2);
        nn::Tensor<T> d_action(n, action_dim_);
        nn::Tensor<T> d_logp(n, 1);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < action_dim_; ++j)
                d_action(i, j) = din1(i, obs_dim_ + j) + din2(i, obs_dim_ + j);
            d_logp(i, 0) = static_cast<T>(a_coef / n);
        }
        actor_grads_.zero();
        actor_.backward(acache, d_action, d_logp, actor_grads_);
        auto [pa, ga] = param_list(actor_, actor_grads_);
        opt_actor_.step(pa, ga);

        double mean_term = 0.0;
        for (int i = 0; i < n; ++i)
            mean_term += (static_cast<double>(logp(i, 0)) + cfg_.entropy_target) / n;
        const double alpha_loss = -static_cast<double>(log_alpha_.data[0]) * mean_term;
        nn::Tensor<T> d_log_alpha = nn::Tensor<T>::full(1, 1, static_cast<T>(-mean_term));
        opt_alpha_.step({&log_alpha_}, {&d_log_alpha});
        return {actor_loss, alpha_loss};
    }

    /// Every persistent tensor under a stable name: three network parameter
    /// sets, the temperature, and optimizer moments. No target copies exist.
    template <typename F>
    void for_each_tensor(F&& f) {
        actor_.for_each_tensor("actor", f);
        critic1_.for_each_tensor("critic1", f);
        critic2_.for_each_tensor("critic2", f);
        f("log_alpha", log_alpha_);
        visit_adam("adam.actor", opt_actor_, f);
        visit_adam("adam.critic1", opt_c1_, f);
        visit_adam("adam.critic2", opt_c2_, f);
        visit_adam("adam.alpha", opt_alpha_, f);
    }

    // Checkpoint counters: critic/actor updates, Adam steps, normalization
    // warmup counters.
    std::vector<long> counters() const {
        return {critic_updates_,
                actor_updates_,
                opt_actor_.step_count(),
                opt_c1_.step_count(),
                opt_c2_.step_count(),
                opt_alpha_.step_count(),
                actor_.trunk().train_forward_count(),
                critic1_.trunk().train_forward_count(),
                critic2_.trunk().train_forward_count()};
    }

    void set_counters(const std::vector<long>& c) {
        if (c.size() != 9) throw std::invalid_argument("set_counters: expected 9 values");
        critic_updates_ = c[0];
        actor_updates_ = c[1];
        opt_actor_.set_step_count(c[2]);
        opt_c1_.set_step_count(c[3]);
        opt_c2_.set_step_count(c[4]);
        opt_alpha_.set_step_count(c[5]);
        actor_.trunk().set_train_forward_count(c[6]);
        critic1_.trunk().set_train_forward_count(c[7]);
        critic2_.trunk().set_train_forward_count(c[8]);
    }

private:
    template <typename Net, typename Grads>
    static std::pair<std::vector<nn::Tensor<T>*>, std::vector<const nn::Tensor<T>*>> param_list(
        Net& net, Grads& grads) {
        std::vector<nn::Tensor<T>*> p;
        std::vector<const nn::Tensor<T>*> g;
        net.for_each_param(grads, [&](nn::Tensor<T>& value, nn::Tensor<T>& grad) {
            p.push_back(&value);
            g.push_back(&grad);
        });
        return {p, g};
    }

    template <typename F>
    static void visit_adam(const std::string& prefix, nn::Adam<T>& opt, F&& f) {
        auto& m = opt.first_moments();
        auto& v = opt.second_moments();
        for (std::size_t i = 0; i < m.size(); ++i) {
            f(prefix + ".m" + std::to_string(i), m[i]);
            f(prefix + ".v" + std::to_string(i), v[i]);
        }
    }

    AgentConfig cfg_;
    int obs_dim_ = 0;
    int action_dim_ = 0;
    core::RngStream rng_;

    nn::Actor<T> actor_;
    nn::Critic<T> critic1_, critic2_;
    nn::Tensor<T> log_alpha_;
    typename nn::Actor<T>::Grads actor_grads_;
    typename nn::Critic<T>::Grads c1_grads_, c2_grads_;
    nn::Adam<T> opt_actor_, opt_c1_, opt_c2_, opt_alpha_;
    long critic_updates_ = 0;
    long actor_updates_ = 0;
};

}  // namespace dasmr::agent
