#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "gg/tape.hpp"

namespace gg::nn {

namespace detail {
inline void check_grad_finite(const Tape& tape, ValueId id, std::size_t ordinal) {
    const Tensor& g = tape.grad(id);
    for (double v : g.data)
        if (!std::isfinite(v))
            throw std::runtime_error("non-finite gradient on parameter #" + std::to_string(ordinal) +
                                     " (shape " + Tensor::shape_str(tape.value(id).shape) + ")");
}
}  // namespace detail

// Plain stochastic gradient descent over the tape's registered parameters.
class Sgd {
public:
    Sgd(Tape& tape, double lr) : tape_(tape), lr_(lr) {}

    void set_lr(double lr) { lr_ = lr; }
    double lr() const { return lr_; }

    void step() {
        const auto& ps = tape_.params();
        for (std::size_t p = 0; p < ps.size(); ++p) {
            detail::check_grad_finite(tape_, ps[p], p);
            Tensor& v = tape_.value(ps[p]);
            const Tensor& g = tape_.grad(ps[p]);
            for (std::size_t i = 0; i < v.numel(); ++i) v.data[i] -= lr_ * g.data[i];
        }
    }

private:
    Tape& tape_;
    double lr_;
};

// Adam with bias correction (Kingma & Ba defaults).
class Adam {
public:
    Adam(Tape& tape, double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
        : tape_(tape), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
        const auto& ps = tape_.params();
        m_.reserve(ps.size());
        v_.reserve(ps.size());
        for (ValueId id : ps) {
            m_.push_back(Tensor::zeros(tape_.value(id).shape));
            v_.push_back(Tensor::zeros(tape_.value(id).shape));
        }
    }

    void set_lr(double lr) { lr_ = lr; }
    double lr() const { return lr_; }

    void step() {
        const auto& ps = tape_.params();
        ++t_;
        const double bc1 = 1.0 - std::pow(beta1_, t_);
        const double bc2 = 1.0 - std::pow(beta2_, t_);
        for (std::size_t p = 0; p < ps.size(); ++p) {
            detail::check_grad_finite(tape_, ps[p], p);
            Tensor& val = tape_.value(ps[p]);
            const Tensor& g = tape_.grad(ps[p]);
            Tensor& m = m_[p];
            Tensor& v = v_[p];
            for (std::size_t i = 0; i < val.numel(); ++i) {
                m.data[i] = beta1_ * m.data[i] + (1.0 - beta1_) * g.data[i];
                v.data[i] = beta2_ * v.data[i] + (1.0 - beta2_) * g.data[i] * g.data[i];
                const double mh = m.data[i] / bc1;
                const double vh = v.data[i] / bc2;
                val.data[i] -= lr_ * mh / (std::sqrt(vh) + eps_);
            }
        }
    }

private:
    Tape& tape_;
    double lr_, beta1_, beta2_, eps_;
    int t_ = 0;
    std::vector<Tensor> m_, v_;
};

}  // namespace gg::nn
