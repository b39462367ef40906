#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "dasmr/core/rng.hpp"
#include "dasmr/nn/tensor.hpp"

namespace dasmr::nn {

template <typename T = float>
struct MlpSpec {
    int input_dim = 0;
    std::vector<int> hidden = {256, 256};
    bool batch_norm = true;
    bool renorm = true;          ///< running-stat-corrected normalization; false = plain
    T momentum = T(0.99);        ///< running-statistic decay
    T eps = T(1e-5);
    T r_max = T(3);              ///< r clamped to [1/r_max, r_max]
    T d_max = T(5);              ///< d clamped to [-d_max, d_max]
    long renorm_warmup = 10000;  ///< train forwards with the correction disabled

    void validate() const {
        if (input_dim < 1) throw std::invalid_argument("MlpSpec: input_dim must be >= 1");
        if (hidden.empty()) throw std::invalid_argument("MlpSpec: at least one hidden layer");
        for (int h : hidden)
            if (h < 1) throw std::invalid_argument("MlpSpec: hidden widths must be >= 1");
        if (momentum < T(0) || momentum >= T(1))
            throw std::invalid_argument("MlpSpec: momentum must lie in [0, 1)");
        if (eps <= T(0) || r_max < T(1) || d_max < T(0) || renorm_warmup < 0)
            throw std::invalid_argument("MlpSpec: bad normalization constants");
    }
};

/// Fully-connected trunk: per hidden layer, affine then (optionally) batch
/// renormalization then ReLU. Output heads live outside this class.
///
/// Train-mode normalization of the affine output a with batch statistics
/// (mu_B, sigma_B) and running statistics (mu, sigma):
///   r = clamp(sigma_B / sigma, 1/r_max, r_max),  d = clamp((mu_B - mu)/sigma, ...)
///   z = ((a - mu_B) / sigma_B) * r + d,          y = gamma * z + beta
/// r and d carry no gradient; the batch statistics do. During the warmup
/// period (and in plain mode) r = 1, d = 0, which is classic batch norm.
/// Eval mode normalizes with the running statistics only.
template <typename T = float>
class Mlp {
public:
    struct Layer {
        Tensor<T> W, b;              // trainable
        Tensor<T> gamma, beta;       // trainable, batch_norm only
        Tensor<T> run_mean, run_var; // running statistics [1, width]
    };

    struct LayerGrads {
        Tensor<T> W, b, gamma, beta;
    };
    struct Grads {
        std::vector<LayerGrads> layers;
        void zero() {
            for (auto& l : layers) {
                l.W.fill(T(0));
                l.b.fill(T(0));
                l.gamma.fill(T(0));
                l.beta.fill(T(0));
            }
        }
    };

    struct LayerCache {
        Tensor<T> x;     // affine input
        Tensor<T> zhat;  // (a - mu_B)/sigma_B, train mode
        Tensor<T> mask;  // ReLU derivative, 0/1
        std::vector<T> r, d, inv_sigma;  // per-feature, train mode
        std::vector<T> eval_scale;       // gamma/sqrt(run_var + eps), eval mode
    };
    struct Cache {
        bool train = false;
        std::vector<LayerCache> layers;
    };

    Mlp() = default;

    Mlp(MlpSpec<T> spec, core::RngStream& init_rng) : spec_(std::move(spec)) {
        spec_.validate();
        int fan_in = spec_.input_dim;
        for (int width : spec_.hidden) {
            Layer l;
            l.W = Tensor<T>(fan_in, width);
            const double limit = std::sqrt(6.0 / fan_in);
            for (T& w : l.W.data) w = static_cast<T>(init_rng.uniform(-limit, limit));
            l.b = Tensor<T>(1, width);
            l.gamma = Tensor<T>::full(1, width, T(1));
            l.beta = Tensor<T>(1, width);
            l.run_mean = Tensor<T>(1, width);
            l.run_var = Tensor<T>::full(1, width, T(1));
            layers_.push_back(std::move(l));
            fan_in = width;
        }
    }

    const MlpSpec<T>& spec() const { return spec_; }
    int output_dim() const { return spec_.hidden.back(); }
    std::vector<Layer>& layers() { return layers_; }
    const std::vector<Layer>& layers() const { return layers_; }
    long train_forward_count() const { return bn_updates_; }
    void set_train_forward_count(long n) { bn_updates_ = n; }

    Grads make_grads() const {
        Grads g;
        for (const Layer& l : layers_) {
            LayerGrads lg;
            lg.W = Tensor<T>(l.W.rows, l.W.cols);
            lg.b = Tensor<T>(1, l.b.cols);
            lg.gamma = Tensor<T>(1, l.gamma.cols);
            lg.beta = Tensor<T>(1, l.beta.cols);
            g.layers.push_back(std::move(lg));
        }
        return g;
    }

    /// Train mode updates running statistics and the warmup counter; pass a
    /// cache to enable backward().
    Tensor<T> forward(const Tensor<T>& x, bool train, Cache* cache = nullptr) {
        if (x.cols != spec_.input_dim) throw std::invalid_argument("Mlp: input width mismatch");
        if (cache) {
            cache->train = train;
            cache->layers.assign(layers_.size(), LayerCache{});
        }
        const bool correct = spec_.renorm && bn_updates_ >= spec_.renorm_warmup;
        Tensor<T> cur = x;
        Tensor<T> a;
        for (std::size_t li = 0; li < layers_.size(); ++li) {
            Layer& l = layers_[li];
            const int width = l.W.cols;
            matmul(cur, l.W, a);
            for (int i = 0; i < a.rows; ++i) {
                T* arow = a.row(i);
                for (int j = 0; j < width; ++j) arow[j] += l.b.data[j];
            }
            LayerCache* lc = cache ? &cache->layers[li] : nullptr;
            if (lc) lc->x = cur;

            if (spec_.batch_norm && train) {
                const int n = a.rows;
                if (lc) {
                    lc->zhat = Tensor<T>(n, width);
                    lc->r.assign(width, T(1));
                    lc->d.assign(width, T(0));
                    lc->inv_sigma.assign(width, T(1));
                }
                for (int j = 0; j < width; ++j) {
                    double mu = 0.0;
                    for (int i = 0; i < n; ++i) mu += a(i, j);
                    mu /= n;
                    double var = 0.0;
                    for (int i = 0; i < n; ++i) {
                        const double dlt = a(i, j) - mu;
                        var += dlt * dlt;
                    }
                    var /= n;
                    const double sigma = std::sqrt(var + static_cast<double>(spec_.eps));
                    double r = 1.0, d = 0.0;
                    if (correct) {
                        const double sigma_run =
                            std::sqrt(static_cast<double>(l.run_var.data[j]) +
                                      static_cast<double>(spec_.eps));
                        r = std::clamp(sigma / sigma_run, 1.0 / spec_.r_max,
                                       static_cast<double>(spec_.r_max));
                        d = std::clamp((mu - l.run_mean.data[j]) / sigma_run,
                                       -static_cast<double>(spec_.d_max),
                                       static_cast<double>(spec_.d_max));
                    }
                    const double inv_sigma = 1.0 / sigma;
                    const double g = l.gamma.data[j], be = l.beta.data[j];
                    for (int i = 0; i < n; ++i) {
                        const double zh = (a(i, j) - mu) * inv_sigma;
                        if (lc) lc->zhat(i, j) = static_cast<T>(zh);
                        a(i, j) = static_cast<T>(g * (zh * r + d) + be);
                    }
                    if (lc) {
                        lc->r[j] = static_cast<T>(r);
                        lc->d[j] = static_cast<T>(d);
                        lc->inv_sigma[j] = static_cast<T>(inv_sigma);
                    }
                    const T m = spec_.momentum;
                    l.run_mean.data[j] = m * l.run_mean.data[j] + (T(1) - m) * static_cast<T>(mu);
                    l.run_var.data[j] = m * l.run_var.data[j] + (T(1) - m) * static_cast<T>(var);
                }
            } else if (spec_.batch_norm) {
                if (lc) lc->eval_scale.assign(width, T(1));
                for (int j = 0; j < width; ++j) {
                    const double scale =
                        l.gamma.data[j] / std::sqrt(static_cast<double>(l.run_var.data[j]) +
                                                    static_cast<double>(spec_.eps));
                    const double shift = l.beta.data[j] - l.run_mean.data[j] * scale;
                    if (lc) lc->eval_scale[j] = static_cast<T>(scale);
                    for (int i = 0; i < a.rows; ++i)
                        a(i, j) = static_cast<T>(scale * a(i, j) + shift);
                }
            }

            if (lc) lc->mask = Tensor<T>(a.rows, width);
            for (int i = 0; i < a.rows; ++i) {
                T* arow = a.row(i);
                for (int j = 0; j < width; ++j) {
                    const bool pos = arow[j] > T(0);
                    if (!pos) arow[j] = T(0);
                    if (lc) lc->mask(i, j) = pos ? T(1) : T(0);
                }
            }
            cur = a;
        }
        if (train) bn_updates_ += 1;
        cur.check_finite("Mlp::forward output");
        return cur;
    }

    /// Reverse mode through a train-mode cache, batch-statistics path
    /// included. Parameter gradients accumulate into `grads`; returns the
    /// input gradient.
    Tensor<T> backward(const Cache& cache, const Tensor<T>& dout, Grads& grads) const {
        if (!cache.train) throw std::invalid_argument("Mlp::backward: needs a train-mode cache");
        if (grads.layers.size() != layers_.size())
            throw std::invalid_argument("Mlp::backward: grads shape mismatch");
        Tensor<T> dcur = dout;
        Tensor<T> da;
        for (int li = static_cast<int>(layers_.size()) - 1; li >= 0; --li) {
            const Layer& l = layers_[li];
            const LayerCache& lc = cache.layers[li];
            LayerGrads& lg = grads.layers[li];
            const int width = l.W.cols;
            const int n = lc.mask.rows;
            if (dcur.rows != n || dcur.cols != width)
                throw std::invalid_argument("Mlp::backward: upstream gradient shape mismatch");

            // dy = dout ⊙ relu', then the normalization backward per feature.
            da = Tensor<T>(n, width);
            if (spec_.batch_norm) {
                for (int j = 0; j < width; ++j) {
                    const double g = l.gamma.data[j];
                    const double r = lc.r[j], d = lc.d[j], inv_sigma = lc.inv_sigma[j];
                    double dgamma = 0.0, dbeta = 0.0, mean_gz = 0.0, mean_gzz = 0.0;
                    for (int i = 0; i < n; ++i) {
                        const double dy = static_cast<double>(dcur(i, j)) * lc.mask(i, j);
                        const double zh = lc.zhat(i, j);
                        dgamma += dy * (zh * r + d);
                        dbeta += dy;
                        const double gz = dy * g * r;
                        mean_gz += gz;
                        mean_gzz += gz * zh;
                    }
                    mean_gz /= n;
                    mean_gzz /= n;
                    lg.gamma.data[j] += static_cast<T>(dgamma);
                    lg.beta.data[j] += static_cast<T>(dbeta);
                    for (int i = 0; i < n; ++i) {
                        const double dy = static_cast<double>(dcur(i, j)) * lc.mask(i, j);
                        const double gz = dy * g * r;
                        da(i, j) = static_cast<T>(
                            inv_sigma * (gz - mean_gz - static_cast<double>(lc.zhat(i, j)) * mean_gzz));
                    }
                }
            } else {
                for (int i = 0; i < n; ++i)
                    for (int j = 0; j < width; ++j) da(i, j) = dcur(i, j) * lc.mask(i, j);
            }

            matmul_at_b(lc.x, da, lg.W, /*accumulate=*/true);
            for (int j = 0; j < width; ++j) {
                double acc = 0.0;
                for (int i = 0; i < n; ++i) acc += da(i, j);
                lg.b.data[j] += static_cast<T>(acc);
            }
            matmul_a_bt(da, l.W, dcur);
        }
        return dcur;
    }

    /// Input gradients only, through an eval-mode cache (the normalization is
    /// a fixed affine map; parameters are treated as frozen).
    Tensor<T> backward_input(const Cache& cache, const Tensor<T>& dout) const {
        if (cache.train)
            throw std::invalid_argument("Mlp::backward_input: needs an eval-mode cache");
        Tensor<T> dcur = dout;
        Tensor<T> da;
        for (int li = static_cast<int>(layers_.size()) - 1; li >= 0; --li) {
            const Layer& l = layers_[li];
            const LayerCache& lc = cache.layers[li];
            const int width = l.W.cols;
            const int n = lc.mask.rows;
            da = Tensor<T>(n, width);
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < width; ++j) {
                    const T s = spec_.batch_norm ? lc.eval_scale[j] : T(1);
                    da(i, j) = dcur(i, j) * lc.mask(i, j) * s;
                }
            matmul_a_bt(da, l.W, dcur);
        }
        return dcur;
    }

    /// Trainable parameters paired with their gradient slots, in a fixed
    /// order shared by the optimizer and the checkpoint format.
    template <typename F>
    void for_each_param(Grads& g, F&& f) {
        for (std::size_t li = 0; li < layers_.size(); ++li) {
            f(layers_[li].W, g.layers[li].W);
            f(layers_[li].b, g.layers[li].b);
            if (spec_.batch_norm) {
                f(layers_[li].gamma, g.layers[li].gamma);
                f(layers_[li].beta, g.layers[li].beta);
            }
        }
    }

    /// All persistent tensors (trainable + running statistics), named.
    template <typename F>
    void for_each_tensor(const std::string& prefix, F&& f) {
        for (std::size_t li = 0; li < layers_.size(); ++li) {
            const std::string p = prefix + ".l" + std::to_string(li) + ".";
            f(p + "W", layers_[li].W);
            f(p + "b", layers_[li].b);
            if (spec_.batch_norm) {
                f(p + "gamma", layers_[li].gamma);
                f(p + "beta", layers_[li].beta);
                f(p + "run_mean", layers_[li].run_mean);
                f(p + "run_var", layers_[li].run_var);
            }
        }
    }

private:
    MlpSpec<T> spec_;
    std::vector<Layer> layers_;
    long bn_updates_ = 0;
};

}  // namespace dasmr::nn
