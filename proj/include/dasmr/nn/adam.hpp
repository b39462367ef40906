#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "dasmr/nn/tensor.hpp"

namespace dasmr::nn {

template <typename T = float>
struct AdamConfig {
    T lr = T(3e-4);
    T beta1 = T(0.5);  ///< reduced momentum, matching the no-target-network setup
    T beta2 = T(0.999);
    T eps = T(1e-8);
};

/// Bias-corrected adaptive-moment optimizer over an ordered list of parameter
/// tensors. The list's order and shapes are fixed at init; moments live here.
template <typename T = float>
class Adam {
public:
    Adam() = default;
    explicit Adam(AdamConfig<T> cfg) : cfg_(cfg) {}

    const AdamConfig<T>& config() const { return cfg_; }
    long step_count() const { return t_; }

    void init(const std::vector<Tensor<T>*>& params) {
        m_.clear();
        v_.clear();
        for (const Tensor<T>* p : params) {
            m_.emplace_back(p->rows, p->cols);
            v_.emplace_back(p->rows, p->cols);
        }
        t_ = 0;
    }

    void step(const std::vector<Tensor<T>*>& params, const std::vector<const Tensor<T>*>& grads) {
        if (params.size() != m_.size() || grads.size() != m_.size())
            throw std::invalid_argument("Adam::step: parameter list changed since init");
        t_ += 1;
        const double bc1 = 1.0 - std::pow(static_cast<double>(cfg_.beta1), t_);
        const double bc2 = 1.0 - std::pow(static_cast<double>(cfg_.beta2), t_);
        for (std::size_t k = 0; k < params.size(); ++k) {
            Tensor<T>& p = *params[k];
            const Tensor<T>& g = *grads[k];
            if (!p.same_shape(m_[k]) || !g.same_shape(m_[k]))
                throw std::invalid_argument("Adam::step: shape mismatch");
            for (std::size_t i = 0; i < p.size(); ++i) {
                m_[k].data[i] = cfg_.beta1 * m_[k].data[i] + (T(1) - cfg_.beta1) * g.data[i];
                v_[k].data[i] =
                    cfg_.beta2 * v_[k].data[i] + (T(1) - cfg_.beta2) * g.data[i] * g.data[i];
                const double mhat = m_[k].data[i] / bc1;
                const double vhat = v_[k].data[i] / bc2;
                p.data[i] -= static_cast<T>(cfg_.lr * mhat /
                                            (std::sqrt(vhat) + static_cast<double>(cfg_.eps)));
            }
        }
    }

    // Checkpoint access: moments and step counter.
    std::vector<Tensor<T>>& first_moments() { return m_; }
    std::vector<Tensor<T>>& second_moments() { return v_; }
    void set_step_count(long t) { t_ = t; }

private:
    AdamConfig<T> cfg_;
    std::vector<Tensor<T>> m_, v_;
    long t_ = 0;
};

}  // namespace dasmr::nn
