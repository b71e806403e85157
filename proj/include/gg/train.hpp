#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "gg/optim.hpp"
#include "gg/rng.hpp"
#include "gg/tape.hpp"

namespace gg::nn {

struct TrainConfig {
    int epochs = 20;
    int batch = 4;
    double lr = 1e-3;
    std::uint64_t seed = 0;
    // fraction of samples held out for validation; <=0 validates on the
    // training set itself (memorization runs)
    double val_fraction = 0.1;
    // optional early exit once validation accuracy (percent) reaches this
    double stop_val_acc = -1.0;
    // additional stop requirement on the mean pose-vector error, for models
    // that report one; <=0 disables it
    double stop_pose_err = -1.0;
};

// Seeded 90/10 train/validation split over sample indices.
struct Split {
    std::vector<std::size_t> train, val;

    static Split make(std::size_t count, std::uint64_t seed, double val_fraction = 0.1) {
        std::vector<std::size_t> idx(count);
        for (std::size_t i = 0; i < count; ++i) idx[i] = i;
        Rng rng(derive_seed(seed, "train-val-split"));
        rng.shuffle(idx);
        Split s;
        const std::size_t n_val = std::max<std::size_t>(1, static_cast<std::size_t>(count * val_fraction));
        s.val.assign(idx.begin(), idx.begin() + n_val);
        s.train.assign(idx.begin() + n_val, idx.end());
        if (s.train.empty()) throw std::invalid_argument("dataset too small to split");
        return s;
    }
};

// Sums per-sample gradients so the optimizer can step once per mini-batch.
class GradAccumulator {
public:
    explicit GradAccumulator(Tape& tape) : tape_(tape) {
        for (ValueId id : tape.params()) acc_.push_back(Tensor::zeros(tape.value(id).shape));
    }

    void add_current() {
        const auto& ps = tape_.params();
        for (std::size_t p = 0; p < ps.size(); ++p) {
            const Tensor& g = tape_.grad(ps[p]);
            for (std::size_t i = 0; i < g.numel(); ++i) acc_[p].data[i] += g.data[i];
        }
        ++count_;
    }

    // Writes the mean gradient into the tape and resets.
    void flush_mean() {
        if (count_ == 0) return;
        const double inv = 1.0 / static_cast<double>(count_);
        const auto& ps = tape_.params();
        for (std::size_t p = 0; p < ps.size(); ++p) {
            Tensor& g = tape_.grad_mut(ps[p]);
            for (std::size_t i = 0; i < g.numel(); ++i) {
                g.data[i] = acc_[p].data[i] * inv;
                acc_[p].data[i] = 0.0;
            }
        }
        count_ = 0;
    }

    int pending() const { return count_; }

private:
    Tape& tape_;
    std::vector<Tensor> acc_;
    int count_ = 0;
};

// Copy-out/copy-in of all parameter values, for best-checkpoint tracking
// and NaN-abort recovery.
inline std::vector<Tensor> snapshot_params(const Tape& tape) {
    std::vector<Tensor> out;
    out.reserve(tape.params().size());
    for (ValueId id : tape.params()) out.push_back(tape.value(id));
    return out;
}

inline void restore_params(Tape& tape, const std::vector<Tensor>& snap) {
    const auto& ps = tape.params();
    if (snap.size() != ps.size()) throw std::invalid_argument("parameter snapshot size mismatch");
    for (std::size_t i = 0; i < ps.size(); ++i) tape.value(ps[i]).data = snap[i].data;
}

}  // namespace gg::nn
