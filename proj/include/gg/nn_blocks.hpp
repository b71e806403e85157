#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "gg/checkpoint.hpp"
#include "gg/rng.hpp"
#include "gg/tape.hpp"

namespace gg::nn {

// Binds named parameters into a tape, either as trainable leaves (fresh
// Glorot-uniform init) or as frozen inputs loaded from a checkpoint. The
// same graph-building code serves training and inference.
struct Wiring {
    Tape& tape;
    bool trainable = true;
    const Checkpoint* from = nullptr;  // when set, values come from here
    Rng* rng = nullptr;                // when fresh, weights come from here
    std::vector<std::pair<std::string, ValueId>> bound;

    ValueId bind(const std::string& name, Tensor init) {
        const ValueId id = trainable ? tape.param(std::move(init)) : tape.input(std::move(init));
        bound.emplace_back(name, id);
        return id;
    }

    ValueId weights(const std::string& name, std::vector<int> shape, int fan_in, int fan_out) {
        if (from) return bind(name, require_shape(name, shape));
        const double bound_v = std::sqrt(6.0 / (fan_in + fan_out));
        return bind(name, Tensor::uniform(std::move(shape), bound_v, *rng));
    }

    ValueId zeros(const std::string& name, std::vector<int> shape) {
        if (from) return bind(name, require_shape(name, shape));
        return bind(name, Tensor::zeros(std::move(shape)));
    }

    ValueId constant(const std::string& name, std::vector<int> shape, double value) {
        if (from) return bind(name, require_shape(name, shape));
        Tensor t = Tensor::zeros(std::move(shape));
        std::fill(t.data.begin(), t.data.end(), value);
        return bind(name, std::move(t));
    }

    void save_into(Checkpoint& ck) const {
        for (const auto& [name, id] : bound) ck.add(name, tape.value(id));
    }

private:
    Tensor require_shape(const std::string& name, const std::vector<int>& shape) const {
        Tensor t = from->get(name);
        if (t.shape != shape)
            throw std::runtime_error("checkpoint tensor '" + name + "' has shape " +
                                     Tensor::shape_str(t.shape) + ", model expects " + Tensor::shape_str(shape));
        return t;
    }
};

// conv3d(3^3, pad 1) + relu + max_pool(2) per stage. channels = {1,8,16,32}
// maps [1,16,16,16] -> [32,2,2,2].
inline ValueId conv_encoder(Wiring& w, ValueId x, const std::vector<int>& channels,
                            const std::string& prefix) {
    ValueId cur = x;
    for (std::size_t s = 0; s + 1 < channels.size(); ++s) {
        const int ci = channels[s], co = channels[s + 1];
        const std::string stem = prefix + ".conv" + std::to_string(s);
        const ValueId k = w.weights(stem + ".k", {co, ci, 3, 3, 3}, ci * 27, co * 27);
        const ValueId b = w.zeros(stem + ".b", {co});
        cur = w.tape.max_pool3d(w.tape.relu(w.tape.conv3d(cur, k, b, 1)));
    }
    return cur;
}

// Occupancy grids are ~90% empty; logit(0.1) keeps a fresh sigmoid decoder
// near that base rate from step one.
constexpr double kOccupancyPriorLogit = -2.2;

// fully_connected + relu + reshape to the smallest cube, then per stage
// upsample(x2) + conv3d, relu between stages, sigmoid at the end.
// channels = {32,16,8,1} with base_res 2 maps a flat vector to [1,16,16,16].
// final_bias seeds the last conv bias so fresh models start near the prior
// occupancy rate instead of collapsing into the saturated all-empty output,
// where the gradient dies.
inline ValueId conv_decoder(Wiring& w, ValueId z, const std::vector<int>& channels, int base_res,
                            const std::string& prefix, double final_bias = 0.0) {
    const int z_len = w.tape.value(z).shape[0];
    const int c0 = channels[0];
    const int base_numel = c0 * base_res * base_res * base_res;
    const ValueId fw = w.weights(prefix + ".fc.w", {base_numel, z_len}, z_len, base_numel);
    const ValueId fb = w.zeros(prefix + ".fc.b", {base_numel});
    ValueId cur = w.tape.reshape(w.tape.relu(w.tape.fully_connected(z, fw, fb)),
                                 {c0, base_res, base_res, base_res});
    for (std::size_t s = 0; s + 1 < channels.size(); ++s) {
        const int ci = channels[s], co = channels[s + 1];
        const bool last = s + 2 >= channels.size();
        const std::string stem = prefix + ".conv" + std::to_string(s);
        const ValueId k = w.weights(stem + ".k", {co, ci, 3, 3, 3}, ci * 27, co * 27);
        const ValueId b = last ? w.constant(stem + ".b", {co}, final_bias) : w.zeros(stem + ".b", {co});
        cur = w.tape.conv3d(w.tape.upsample_nearest(cur), k, b, 1);
        if (!last) cur = w.tape.relu(cur);
    }
    return w.tape.sigmoid(cur);
}

// h = relu(W1 x + b1); y = W2 h + b2
inline ValueId fc_pair(Wiring& w, ValueId x, int hidden, int out, const std::string& prefix) {
    const int in = w.tape.value(x).shape[0];
    const ValueId w1 = w.weights(prefix + ".fc1.w", {hidden, in}, in, hidden);
    const ValueId b1 = w.zeros(prefix + ".fc1.b", {hidden});
    const ValueId w2 = w.weights(prefix + ".fc2.w", {out, hidden}, hidden, out);
    const ValueId b2 = w.zeros(prefix + ".fc2.b", {out});
    return w.tape.fully_connected(w.tape.relu(w.tape.fully_connected(x, w1, b1)), w2, b2);
}

// z-score statistics over a column-structured sample set, guarded against
// zero variance. Used for property/pose/latent normalization.
struct Normalizer {
    std::vector<double> mean, std;

    static Normalizer fit(const std::vector<std::vector<double>>& rows) {
        if (rows.empty()) throw std::invalid_argument("cannot fit a normalizer to no rows");
        const std::size_t d = rows[0].size();
        Normalizer n;
        n.mean.assign(d, 0.0);
        n.std.assign(d, 0.0);
        for (const auto& r : rows)
            for (std::size_t i = 0; i < d; ++i) n.mean[i] += r[i];
        for (double& m : n.mean) m /= static_cast<double>(rows.size());
        for (const auto& r : rows)
            for (std::size_t i = 0; i < d; ++i) {
                const double c = r[i] - n.mean[i];
                n.std[i] += c * c;
            }
        for (double& s : n.std) {
            s = std::sqrt(s / static_cast<double>(rows.size()));
            if (s < 1e-12) s = 1.0;
        }
        return n;
    }

    std::vector<double> apply(const std::vector<double>& row) const {
        std::vector<double> out(row.size());
        for (std::size_t i = 0; i < row.size(); ++i) out[i] = (row[i] - mean[i]) / std[i];
        return out;
    }

    std::vector<double> invert(const std::vector<double>& row) const {
        std::vector<double> out(row.size());
        for (std::size_t i = 0; i < row.size(); ++i) out[i] = row[i] * std[i] + mean[i];
        return out;
    }

    void save_into(Checkpoint& ck, const std::string& prefix) const {
        ck.add(prefix + ".mean", Tensor({static_cast<int>(mean.size())}, mean));
        ck.add(prefix + ".std", Tensor({static_cast<int>(std.size())}, std));
    }

    static Normalizer load(const Checkpoint& ck, const std::string& prefix) {
        Normalizer n;
        n.mean = ck.get(prefix + ".mean").data;
        n.std = ck.get(prefix + ".std").data;
        return n;
    }
};

}  // namespace gg::nn
