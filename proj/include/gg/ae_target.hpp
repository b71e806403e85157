#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "gg/checkpoint.hpp"
#include "gg/csv.hpp"
#include "gg/nn_blocks.hpp"
#include "gg/targets.hpp"
#include "gg/train.hpp"
#include "gg/voxel.hpp"

namespace gg {

// Percentage of voxels that agree after thresholding both sides at 0.5.
inline double voxel_accuracy(const std::vector<double>& probs, const std::vector<double>& truth) {
    if (probs.size() != truth.size()) throw std::invalid_argument("voxel accuracy needs equal sizes");
    std::size_t match = 0;
    for (std::size_t i = 0; i < probs.size(); ++i)
        match += ((probs[i] > 0.5) == (truth[i] > 0.5));
    return 100.0 * static_cast<double>(match) / static_cast<double>(probs.size());
}

inline double voxel_accuracy(const VoxelGrid& a, const VoxelGrid& b) {
    return voxel_accuracy(a.occ, b.occ);
}

// Target autoencoder: a voxel grid plus its five physical scalars are
// compressed to a 32-vector and decoded back to both.
class Ae1 {
public:
    static constexpr int kLatentDim = 32;
    static constexpr int kGrid = 16;
    static constexpr int kVoxels = kGrid * kGrid * kGrid;

    // Fresh trainable model.
    Ae1(std::uint64_t init_seed, nn::Normalizer prop_norm) : prop_norm_(std::move(prop_norm)) {
        Rng rng(init_seed);
        build_full(/*trainable=*/true, nullptr, &rng);
        build_decoder(nullptr, &rng);
        sync_decoder();
    }

    // Frozen model from a checkpoint.
    explicit Ae1(const nn::Checkpoint& ck) : prop_norm_(nn::Normalizer::load(ck, "norm.prop")) {
        build_full(/*trainable=*/false, &ck, nullptr);
        build_decoder(&ck, nullptr);
    }

    static Ae1 load(const std::string& path) { return Ae1(nn::Checkpoint::load(path)); }

    void save_into(nn::Checkpoint& ck) const {
        full_wiring_save(ck);
        prop_norm_.save_into(ck, "norm.prop");
        ck.add("meta.latent_dim", nn::Tensor::scalar(kLatentDim));
    }

    void save(const std::string& path) const {
        nn::Checkpoint ck;
        save_into(ck);
        ck.save(path);
    }

    // ---- training-side access ----
    nn::Tape& tape() { return tape_; }
    nn::ValueId loss_id() const { return loss_; }

    void set_sample(const VoxelGrid& grid, const PhysicalProperties& props) {
        if (grid.n != kGrid)
            throw std::invalid_argument("grid resolution " + std::to_string(grid.n) + " does not match model (16)");
        nn::Tensor gt({1, kGrid, kGrid, kGrid}, grid.occ);
        tape_.set_value(grid_in_, gt);
        const auto pn = prop_norm_.apply({props.mass, props.i1, props.i2, props.i3, props.friction_mu});
        tape_.set_value(props_in_, nn::Tensor({5}, pn));
    }

    double run_loss() {
        tape_.forward();
        return tape_.value(loss_).data[0];
    }

    // loss terms from the most recent forward pass
    double last_voxel_term() const { return tape_.value(loss_voxel_).data[0]; }
    double last_props_term() const { return tape_.value(loss_props_).data[0]; }

    // ---- inference ----
    std::vector<double> encode(const VoxelGrid& grid, const PhysicalProperties& props) {
        set_sample(grid, props);
        tape_.forward();
        return tape_.value(z_).data;
    }

    struct Decoded {
        std::vector<double> voxel_probs;  // post-sigmoid, threshold at 0.5 for scoring
        PhysicalProperties props;         // de-normalized estimates
    };

    Decoded decode(const std::vector<double>& z) {
        if (z.size() != kLatentDim)
            throw std::invalid_argument("latent length " + std::to_string(z.size()) + " != 32");
        sync_decoder();
        dec_tape_.set_value(dec_z_in_, nn::Tensor({kLatentDim}, z));
        dec_tape_.forward();
        Decoded d;
        d.voxel_probs = dec_tape_.value(dec_recon_).data;
        const auto praw = prop_norm_.invert(dec_tape_.value(dec_props_).data);
        d.props = PhysicalProperties{praw[0], praw[1], praw[2], praw[3], praw[4]};
        return d;
    }

    // Reads the reconstruction produced by the most recent forward pass.
    Decoded last_decoded() const {
        Decoded d;
        d.voxel_probs = tape_.value(recon_).data;
        const auto praw = prop_norm_.invert(tape_.value(props_out_).data);
        d.props = PhysicalProperties{praw[0], praw[1], praw[2], praw[3], praw[4]};
        return d;
    }

    Decoded reconstruct(const VoxelGrid& grid, const PhysicalProperties& props) {
        set_sample(grid, props);
        tape_.forward();
        return last_decoded();
    }

    const nn::Normalizer& prop_norm() const { return prop_norm_; }

private:
    void build_full(bool trainable, const nn::Checkpoint* from, Rng* rng) {
        nn::Wiring w{tape_, trainable, from, rng, {}};
        grid_in_ = tape_.input(nn::Tensor::zeros({1, kGrid, kGrid, kGrid}));
        props_in_ = tape_.input(nn::Tensor::zeros({5}));
        const nn::ValueId conv_out = nn::conv_encoder(w, grid_in_, {1, 8, 16, 32}, "enc");
        const nn::ValueId flat = tape_.reshape(conv_out, {256});
        const nn::ValueId cat = tape_.concat(flat, props_in_);
        const nn::ValueId ew = w.weights("enc.fc.w", {kLatentDim, 261}, 261, kLatentDim);
        const nn::ValueId eb = w.zeros("enc.fc.b", {kLatentDim});
        z_ = tape_.fully_connected(cat, ew, eb);

        auto [recon, props_out] = build_decoder_graph(w, z_);
        recon_ = recon;
        props_out_ = props_out;

        const nn::ValueId grid_flat = tape_.reshape(grid_in_, {kVoxels});
        const nn::ValueId recon_flat = tape_.reshape(recon_, {kVoxels});
        loss_voxel_ = tape_.mse_loss(recon_flat, grid_flat);
        loss_props_ = tape_.mse_loss(props_out_, props_in_);
        loss_ = tape_.add(loss_voxel_, loss_props_);
        full_bound_ = std::move(w.bound);
    }

    std::pair<nn::ValueId, nn::ValueId> build_decoder_graph(nn::Wiring& w, nn::ValueId z) {
        const nn::ValueId recon = nn::conv_decoder(w, z, {32, 16, 8, 1}, 2, "dec", nn::kOccupancyPriorLogit);
        const nn::ValueId props_out = nn::fc_pair(w, z, 32, 5, "dec_p");
        return {recon, props_out};
    }

    void build_decoder(const nn::Checkpoint* from, Rng* rng) {
        // Decoder-only tape for decoding arbitrary latents; its parameters
        // mirror the full tape's by name (see sync_decoder).
        nn::Wiring w{dec_tape_, /*trainable=*/false, from, rng, {}};
        dec_z_in_ = dec_tape_.input(nn::Tensor::zeros({kLatentDim}));
        auto [recon, props_out] = build_decoder_graph(w, dec_z_in_);
        dec_recon_ = recon;
        dec_props_ = props_out;
        dec_bound_ = std::move(w.bound);
    }

    void sync_decoder() {
        // copy decoder parameter values from the full tape by name
        std::map<std::string, nn::ValueId> full;
        for (const auto& [name, id] : full_bound_) full[name] = id;
        for (const auto& [name, id] : dec_bound_) {
            const auto it = full.find(name);
            if (it != full.end()) dec_tape_.value(id).data = tape_.value(it->second).data;
        }
    }

    void full_wiring_save(nn::Checkpoint& ck) const {
        for (const auto& [name, id] : full_bound_) ck.add(name, tape_.value(id));
    }

    nn::Tape tape_, dec_tape_;
    std::vector<std::pair<std::string, nn::ValueId>> full_bound_, dec_bound_;
    nn::ValueId grid_in_{}, props_in_{}, z_{}, recon_{}, props_out_{}, loss_{}, loss_voxel_{}, loss_props_{};
    nn::ValueId dec_z_in_{}, dec_recon_{}, dec_props_{};
    nn::Normalizer prop_norm_;
};

struct TrainedAe1 {
    nn::Checkpoint checkpoint;  // weights at the best validation epoch
    double best_val_acc = 0.0;
    double final_val_loss = 0.0;
    double final_prop_relerr = 0.0;
    int epochs_run = 0;
    bool nan_aborted = false;
};

inline double mean_property_rel_err(const PhysicalProperties& est, const PhysicalProperties& truth) {
    const auto a = est.to_array(), b = truth.to_array();
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]) / std::max(std::abs(b[i]), 1e-12);
    return s / static_cast<double>(a.size());
}

inline TrainedAe1 train_ae1(const std::vector<TargetSample>& data, const nn::TrainConfig& cfg,
                            const std::string& csv_path) {
    if (data.size() < 2) throw std::invalid_argument("need at least 2 samples to train");
    std::vector<std::vector<double>> prop_rows;
    prop_rows.reserve(data.size());
    for (const auto& s : data) {
        const auto a = s.props.to_array();
        prop_rows.emplace_back(a.begin(), a.end());
    }
    Ae1 model(derive_seed(cfg.seed, "ae1-init"), nn::Normalizer::fit(prop_rows));

    nn::Split split;
    if (cfg.val_fraction > 0.0) {
        split = nn::Split::make(data.size(), cfg.seed, cfg.val_fraction);
    } else {
        for (std::size_t i = 0; i < data.size(); ++i) {
            split.train.push_back(i);
            split.val.push_back(i);
        }
    }

    nn::Adam opt(model.tape(), cfg.lr);
    nn::GradAccumulator acc(model.tape());
    CsvWriter csv(csv_path, {"epoch", "train_loss", "val_loss", "val_voxel_acc", "val_prop_relerr"});

    TrainedAe1 out;
    auto best = nn::snapshot_params(model.tape());
    double best_loss = std::numeric_limits<double>::infinity();

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        Rng erng(derive_seed(cfg.seed, "ae1-epoch", static_cast<std::uint64_t>(epoch)));
        auto order = split.train;
        erng.shuffle(order);

        double train_loss = 0.0;
        bool blew_up = false;
        for (std::size_t i = 0; i < order.size(); ++i) {
            const auto& s = data[order[i]];
            model.set_sample(s.grid, s.props);
            const double loss = model.run_loss();
            if (!std::isfinite(loss)) {
                blew_up = true;
                break;
            }
            model.tape().backward(model.loss_id());
            acc.add_current();
            train_loss += loss;
            if (acc.pending() == cfg.batch || i + 1 == order.size()) {
                acc.flush_mean();
                opt.step();
            }
        }
        if (blew_up) {
            out.nan_aborted = true;
            nn::restore_params(model.tape(), best);
            break;
        }
        train_loss /= static_cast<double>(order.size());

        double val_loss = 0.0, val_acc = 0.0, val_rel = 0.0;
        for (const std::size_t vi : split.val) {
            const auto& s = data[vi];
            model.set_sample(s.grid, s.props);
            val_loss += model.run_loss();
            const auto d = model.last_decoded();
            val_acc += voxel_accuracy(d.voxel_probs, s.grid.occ);
            val_rel += mean_property_rel_err(d.props, s.props);
        }
        const double nv = static_cast<double>(split.val.size());
        val_loss /= nv;
        val_acc /= nv;
        val_rel /= nv;

        csv.row({static_cast<double>(epoch), train_loss, val_loss, val_acc, val_rel});
        out.epochs_run = epoch + 1;

        if (val_acc > out.best_val_acc || (val_acc == out.best_val_acc && val_loss < best_loss)) {
            out.best_val_acc = val_acc;
            best_loss = val_loss;
            out.final_val_loss = val_loss;
            out.final_prop_relerr = val_rel;
            best = nn::snapshot_params(model.tape());
        }
        if (cfg.stop_val_acc > 0.0 && val_acc >= cfg.stop_val_acc) break;
    }

    nn::restore_params(model.tape(), best);
    model.save_into(out.checkpoint);
    return out;
}

}  // namespace gg
