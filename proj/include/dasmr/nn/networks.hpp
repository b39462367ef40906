#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "dasmr/core/rng.hpp"
#include "dasmr/nn/mlp.hpp"
#include "dasmr/nn/tensor.hpp"

namespace dasmr::nn {

inline constexpr double kLogStdMin = -20.0;
inline constexpr double kLogStdMax = 2.0;
inline constexpr double kSquashEps = 1e-6;
inline constexpr double kHalfLog2Pi = 0.91893853320467274;

/// Tanh-squashed Gaussian policy: trunk features feed two linear heads (mean
/// and log-std). Sampling is reparameterized, u = mu + sigma * eps, so
/// gradients flow through both heads; log-probabilities carry the tanh
/// change-of-variables correction.
template <typename T = float>
class Actor {
public:
    struct Cache {
        typename Mlp<T>::Cache trunk;
        Tensor<T> features;
        Tensor<T> action;   // tanh(u)
        Tensor<T> eps;      // the sampled noise
        Tensor<T> sigma;    // exp(clamped log-std)
        Tensor<T> clamp_mask;  // 1 where the raw log-std was within bounds
    };
    struct Grads {
        typename Mlp<T>::Grads trunk;
        Tensor<T> W_mu, b_mu, W_ls, b_ls;
        void zero() {
            trunk.zero();
            W_mu.fill(T(0));
            b_mu.fill(T(0));
            W_ls.fill(T(0));
            b_ls.fill(T(0));
        }
    };

    Actor() = default;

    Actor(MlpSpec<T> trunk_spec, int action_dim, core::RngStream& init_rng)
        : trunk_(std::move(trunk_spec), init_rng), action_dim_(action_dim) {
        const int h = trunk_.output_dim();
        W_mu_ = Tensor<T>(h, action_dim);
        b_mu_ = Tensor<T>(1, action_dim);
        W_ls_ = Tensor<T>(h, action_dim);
        b_ls_ = Tensor<T>(1, action_dim);
        // Small uniform head init keeps early actions near zero.
        for (T& w : W_mu_.data) w = static_cast<T>(init_rng.uniform(-3e-3, 3e-3));
        for (T& w : W_ls_.data) w = static_cast<T>(init_rng.uniform(-3e-3, 3e-3));
    }

    int action_dim() const { return action_dim_; }
    Mlp<T>& trunk() { return trunk_; }
    const Mlp<T>& trunk() const { return trunk_; }

    /// Stochastic forward. log_prob is [N,1]; every action component lies
    /// strictly inside (-1, 1).
    void sample(const Tensor<T>& obs, bool train_mode, core::RngStream& rng, Tensor<T>& action,
                Tensor<T>& log_prob, Cache* cache = nullptr) {
        Tensor<T> features = trunk_.forward(obs, train_mode, cache ? &cache->trunk : nullptr);
        const int n = features.rows;
        Tensor<T> mu, logstd;
        heads(features, mu, logstd);

        action = Tensor<T>(n, action_dim_);
        log_prob = Tensor<T>(n, 1);
        Tensor<T> eps_t(n, action_dim_);
        Tensor<T> sigma_t(n, action_dim_);
        Tensor<T> clamp_mask(n, action_dim_);
        for (int i = 0; i < n; ++i) {
            double lp = 0.0;
            for (int j = 0; j < action_dim_; ++j) {
                const double raw = logstd(i, j);
                const bool inside = raw > kLogStdMin && raw < kLogStdMax;
                const double ls = std::clamp(raw, kLogStdMin, kLogStdMax);
                const double sigma = std::exp(ls);
                const double eps = rng.normal();
                const double u = static_cast<double>(mu(i, j)) + sigma * eps;
                const double a = std::tanh(u);
                action(i, j) = static_cast<T>(a);
                eps_t(i, j) = static_cast<T>(eps);
                sigma_t(i, j) = static_cast<T>(sigma);
                clamp_mask(i, j) = inside ? T(1) : T(0);
                lp += -0.5 * eps * eps - ls - kHalfLog2Pi;
                lp -= std::log(1.0 - a * a + kSquashEps);
            }
            log_prob(i, 0) = static_cast<T>(lp);
        }
        action.check_finite("Actor::sample action");
        log_prob.check_finite("Actor::sample log_prob");
        if (cache) {
            cache->features = std::move(features);
            cache->action = action;
            cache->eps = std::move(eps_t);
            cache->sigma = std::move(sigma_t);
            cache->clamp_mask = std::move(clamp_mask);
        }
    }

    /// Deterministic forward: tanh of the mean head, eval-mode statistics.
    Tensor<T> mean_action(const Tensor<T>& obs) {
        Tensor<T> features = trunk_.forward(obs, /*train=*/false, nullptr);
        Tensor<T> mu, logstd;
        heads(features, mu, logstd);
        for (T& v : mu.data) v = static_cast<T>(std::tanh(static_cast<double>(v)));
        return mu;
    }

    /// Reverse mode from (dL/daction, dL/dlog_prob) through the squash, the
    /// reparameterized sample, both heads, and the trunk.
    void backward(const Cache& cache, const Tensor<T>& d_action, const Tensor<T>& d_log_prob,
                  Grads& grads) {
        const int n = cache.action.rows;
        Tensor<T> d_mu(n, action_dim_);
        Tensor<T> d_ls(n, action_dim_);
        for (int i = 0; i < n; ++i) {
            const double dlp = d_log_prob(i, 0);
            for (int j = 0; j < action_dim_; ++j) {
                const double a = cache.action(i, j);
                const double one_m_a2 = 1.0 - a * a;
                const double w = 2.0 * a * one_m_a2 / (one_m_a2 + kSquashEps);
                const double du = static_cast<double>(d_action(i, j)) * one_m_a2 + dlp * w;
                const double se = static_cast<double>(cache.sigma(i, j)) * cache.eps(i, j);
                d_mu(i, j) = static_cast<T>(du);
                const double dls = du * se - dlp;
                d_ls(i, j) = cache.clamp_mask(i, j) != T(0) ? static_cast<T>(dls) : T(0);
            }
        }
        matmul_at_b(cache.features, d_mu, grads.W_mu, /*accumulate=*/true);
        matmul_at_b(cache.features, d_ls, grads.W_ls, /*accumulate=*/true);
        add_col_sums(d_mu, grads.b_mu);
        add_col_sums(d_ls, grads.b_ls);
        Tensor<T> d_feat, tmp;
        matmul_a_bt(d_mu, W_mu_, d_feat);
        matmul_a_bt(d_ls, W_ls_, tmp);
        for (std::size_t k = 0; k < d_feat.size(); ++k) d_feat.data[k] += tmp.data[k];
        trunk_.backward(cache.trunk, d_feat, grads.trunk);
    }

    Grads make_grads() const {
        Grads g;
        g.trunk = trunk_.make_grads();
        g.W_mu = Tensor<T>(W_mu_.rows, W_mu_.cols);
        g.b_mu = Tensor<T>(1, b_mu_.cols);
        g.W_ls = Tensor<T>(W_ls_.rows, W_ls_.cols);
        g.b_ls = Tensor<T>(1, b_ls_.cols);
        return g;
    }

    template <typename F>
    void for_each_param(Grads& g, F&& f) {
        trunk_.for_each_param(g.trunk, f);
        f(W_mu_, g.W_mu);
        f(b_mu_, g.b_mu);
        f(W_ls_, g.W_ls);
        f(b_ls_, g.b_ls);
    }

    template <typename F>
    void for_each_tensor(const std::string& prefix, F&& f) {
        trunk_.for_each_tensor(prefix + ".trunk", f);
        f(prefix + ".W_mu", W_mu_);
        f(prefix + ".b_mu", b_mu_);
        f(prefix + ".W_ls", W_ls_);
        f(prefix + ".b_ls", b_ls_);
    }

private:
    void heads(const Tensor<T>& features, Tensor<T>& mu, Tensor<T>& logstd) {
        matmul(features, W_mu_, mu);
        matmul(features, W_ls_, logstd);
        for (int i = 0; i < mu.rows; ++i)
            for (int j = 0; j < action_dim_; ++j) {
                mu(i, j) += b_mu_.data[j];
                logstd(i, j) += b_ls_.data[j];
            }
    }

    static void add_col_sums(const Tensor<T>& m, Tensor<T>& out) {
        for (int j = 0; j < m.cols; ++j) {
            double acc = 0.0;
            for (int i = 0; i < m.rows; ++i) acc += m(i, j);
            out.data[j] += static_cast<T>(acc);
        }
    }

    Mlp<T> trunk_;
    int action_dim_ = 0;
    Tensor<T> W_mu_, b_mu_, W_ls_, b_ls_;
};

/// Q-network: trunk over [obs | action] rows plus a scalar linear head.
template <typename T = float>
class Critic {
public:
    struct Cache {
        typename Mlp<T>::Cache trunk;
        Tensor<T> features;
    };
    struct Grads {
        typename Mlp<T>::Grads trunk;
        Tensor<T> W_q, b_q;
        void zero() {
            trunk.zero();
            W_q.fill(T(0));
            b_q.fill(T(0));
        }
    };

    Critic() = default;

    Critic(MlpSpec<T> trunk_spec, core::RngStream& init_rng)
        : trunk_(std::move(trunk_spec), init_rng) {
        const int h = trunk_.output_dim();
        W_q_ = Tensor<T>(h, 1);
        b_q_ = Tensor<T>(1, 1);
        for (T& w : W_q_.data) w = static_cast<T>(init_rng.uniform(-3e-3, 3e-3));
    }

    Mlp<T>& trunk() { return trunk_; }
    const Mlp<T>& trunk() const { return trunk_; }

    Tensor<T> forward(const Tensor<T>& input, bool train_mode, Cache* cache = nullptr) {
        Tensor<T> features = trunk_.forward(input, train_mode, cache ? &cache->trunk : nullptr);
        Tensor<T> q;
        matmul(features, W_q_, q);
        for (int i = 0; i < q.rows; ++i) q(i, 0) += b_q_.data[0];
        q.check_finite("Critic::forward output");
        if (cache) cache->features = std::move(features);
        return q;
    }

    /// Train-mode reverse pass; returns the input gradient.
    Tensor<T> backward(const Cache& cache, const Tensor<T>& d_q, Grads& grads) {
        Tensor<T> d_feat;
        matmul_a_bt(d_q, W_q_, d_feat);
        matmul_at_b(cache.features, d_q, grads.W_q, /*accumulate=*/true);
        double acc = 0.0;
        for (int i = 0; i < d_q.rows; ++i) acc += d_q(i, 0);
        grads.b_q.data[0] += static_cast<T>(acc);
        return trunk_.backward(cache.trunk, d_feat, grads.trunk);
    }

    /// Eval-mode reverse pass with frozen parameters; input gradient only.
    Tensor<T> backward_input(const Cache& cache, const Tensor<T>& d_q) const {
        Tensor<T> d_feat;
        matmul_a_bt(d_q, W_q_, d_feat);
        return trunk_.backward_input(cache.trunk, d_feat);
    }

    Grads make_grads() const {
        Grads g;
        g.trunk = trunk_.make_grads();
        g.W_q = Tensor<T>(W_q_.rows, 1);
        g.b_q = Tensor<T>(1, 1);
        return g;
    }

    template <typename F>
    void for_each_param(Grads& g, F&& f) {
        trunk_.for_each_param(g.trunk, f);
        f(W_q_, g.W_q);
        f(b_q_, g.b_q);
    }

    template <typename F>
    void for_each_tensor(const std::string& prefix, F&& f) {
        trunk_.for_each_tensor(prefix + ".trunk", f);
        f(prefix + ".W_q", W_q_);
        f(prefix + ".b_q", b_q_);
    }

private:
    Mlp<T> trunk_;
    Tensor<T> W_q_, b_q_;
};

}  // namespace dasmr::nn
