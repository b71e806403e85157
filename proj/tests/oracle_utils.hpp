#pragma once

// Independent oracles used by the test suite. The central-difference
// gradient oracle never trusts the tape's backward pass: it re-evaluates the
// recorded graph via forward() replay at perturbed parameter values.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "gg/rng.hpp"
#include "gg/tape.hpp"

namespace oracle {

struct GradCheckStats {
    std::size_t total = 0;
    std::size_t within_rel = 0;  // relative error < rel_tol
    std::size_t within_abs = 0;  // absolute error < abs_tol (fallback)
    std::size_t bad = 0;
    double worst_rel = 0.0;

    double rel_fraction() const { return total == 0 ? 1.0 : static_cast<double>(within_rel) / total; }
    bool all_ok() const { return bad == 0; }
};

// Central finite differences over every registered parameter entry.
inline GradCheckStats check_gradients(gg::nn::Tape& tape, gg::nn::ValueId loss, double step = 1e-5,
                                      double rel_tol = 1e-4, double abs_tol = 1e-6) {
    tape.forward();
    tape.backward(loss);
    std::vector<gg::nn::Tensor> grads;
    grads.reserve(tape.params().size());
    for (auto id : tape.params()) grads.push_back(tape.grad(id));

    GradCheckStats s;
    for (std::size_t p = 0; p < tape.params().size(); ++p) {
        const auto id = tape.params()[p];
        for (std::size_t i = 0; i < tape.value(id).numel(); ++i) {
            const double saved = tape.value(id).data[i];
            tape.value(id).data[i] = saved + step;
            tape.forward();
            const double lp = tape.value(loss).data[0];
            tape.value(id).data[i] = saved - step;
            tape.forward();
            const double lm = tape.value(loss).data[0];
            tape.value(id).data[i] = saved;
            const double fd = (lp - lm) / (2.0 * step);
            const double an = grads[p].data[i];
            const double denom = std::max(std::abs(fd), std::abs(an));
            const double rel = denom > 0.0 ? std::abs(fd - an) / denom : 0.0;
            ++s.total;
            if (rel < rel_tol) {
                ++s.within_rel;
            } else if (std::abs(fd - an) < abs_tol) {
                ++s.within_abs;
            } else {
                ++s.bad;
            }
            if (rel > s.worst_rel) s.worst_rel = rel;
        }
    }
    tape.forward();  // restore recorded values
    return s;
}

// Same oracle, but probing a fixed number of randomly chosen entries per
// parameter tensor — full sweeps are impractical on the convolutional models.
inline GradCheckStats check_gradients_sampled(gg::nn::Tape& tape, gg::nn::ValueId loss,
                                              std::size_t per_param, std::uint64_t seed,
                                              double step = 1e-5, double rel_tol = 1e-4,
                                              double abs_tol = 1e-6) {
    tape.forward();
    tape.backward(loss);
    std::vector<gg::nn::Tensor> grads;
    grads.reserve(tape.params().size());
    for (auto id : tape.params()) grads.push_back(tape.grad(id));

    gg::Rng rng(seed);
    GradCheckStats s;
    for (std::size_t p = 0; p < tape.params().size(); ++p) {
        const auto id = tape.params()[p];
        const std::size_t n = tape.value(id).numel();
        for (std::size_t k = 0; k < per_param; ++k) {
            const std::size_t i =
                static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(n) - 1));
            const double saved = tape.value(id).data[i];
            tape.value(id).data[i] = saved + step;
            tape.forward();
            const double lp = tape.value(loss).data[0];
            tape.value(id).data[i] = saved - step;
            tape.forward();
            const double lm = tape.value(loss).data[0];
            tape.value(id).data[i] = saved;
            const double fd = (lp - lm) / (2.0 * step);
            const double an = grads[p].data[i];
            const double denom = std::max(std::abs(fd), std::abs(an));
            const double rel = denom > 0.0 ? std::abs(fd - an) / denom : 0.0;
            ++s.total;
            if (rel < rel_tol) {
                ++s.within_rel;
            } else if (std::abs(fd - an) < abs_tol) {
                ++s.within_abs;
            } else {
                ++s.bad;
            }
            if (rel > s.worst_rel) s.worst_rel = rel;
        }
    }
    tape.forward();
    return s;
}

}  // namespace oracle
