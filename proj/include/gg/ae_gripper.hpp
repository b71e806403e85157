#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "gg/ae_target.hpp"
#include "gg/checkpoint.hpp"
#include "gg/csv.hpp"
#include "gg/grippers.hpp"
#include "gg/nn_blocks.hpp"
#include "gg/train.hpp"
#include "gg/voxel.hpp"

namespace gg {

// Pose vectors fed to the network: position divided by the workspace cube
// extent, quaternion components raw.
constexpr double kPoseScale = 0.10;

inline std::vector<double> normalize_pose(const Pose& p) {
    return {p.r.x / kPoseScale, p.r.y / kPoseScale, p.r.z / kPoseScale,
            p.q.w, p.q.x, p.q.y, p.q.z};
}

inline Pose denormalize_pose(const std::vector<double>& v) {
    if (v.size() != 7) throw std::invalid_argument("pose vector must have 7 components");
    Pose p;
    p.r = Vec3{v[0] * kPoseScale, v[1] * kPoseScale, v[2] * kPoseScale};
    p.q = Quat{v[3], v[4], v[5], v[6]}.normalized_or_identity();
    return p;
}

// Reference loss on raw arrays: voxel MSE plus MSE over normalized poses.
inline double ae2_loss(const std::vector<double>& g, const Pose& p,
                       const std::vector<double>& g_hat, const Pose& p_hat) {
    if (g.size() != g_hat.size()) throw std::invalid_argument("geometry sizes differ");
    double sg = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double d = g[i] - g_hat[i];
        sg += d * d;
    }
    const auto pn = normalize_pose(p), qn = normalize_pose(p_hat);
    double sp = 0.0;
    for (std::size_t i = 0; i < 7; ++i) {
        const double d = pn[i] - qn[i];
        sp += d * d;
    }
    return sg / static_cast<double>(g.size()) + sp / 7.0;
}

// Gripper autoencoder: voxelized finger geometry and the 7-component pose are
// encoded through separate paths into one 48-vector whose first 40 entries
// carry geometry and last 8 carry pose.
class Ae2 {
public:
    static constexpr int kLatentDim = 48;
    static constexpr int kGeoDim = 40;
    static constexpr int kPoseDim = 8;
    static constexpr int kGrid = 16;
    static constexpr int kVoxels = kGrid * kGrid * kGrid;

    explicit Ae2(std::uint64_t init_seed) {
        Rng rng(init_seed);
        build_full(/*trainable=*/true, nullptr, &rng);
        build_decoder(nullptr, &rng);
        sync_decoder();
    }

    explicit Ae2(const nn::Checkpoint& ck) {
        build_full(/*trainable=*/false, &ck, nullptr);
        build_decoder(&ck, nullptr);
    }

    static Ae2 load(const std::string& path) { return Ae2(nn::Checkpoint::load(path)); }

    void save_into(nn::Checkpoint& ck) const {
        for (const auto& [name, id] : full_bound_) ck.add(name, tape_.value(id));
        ck.add("meta.latent_dim", nn::Tensor::scalar(kLatentDim));
        ck.add("meta.geo_dim", nn::Tensor::scalar(kGeoDim));
    }

    void save(const std::string& path) const {
        nn::Checkpoint ck;
        save_into(ck);
        ck.save(path);
    }

    nn::Tape& tape() { return tape_; }
    nn::ValueId loss_id() const { return loss_; }

    void set_sample(const VoxelGrid& grid, const Pose& pose) {
        if (grid.n != kGrid)
            throw std::invalid_argument("grid resolution " + std::to_string(grid.n) + " does not match model (16)");
        if (std::abs(pose.q.norm() - 1.0) > 1e-6)
            throw std::invalid_argument("pose quaternion is not unit length (|q| = " +
                                        std::to_string(pose.q.norm()) + ")");
        tape_.set_value(grid_in_, nn::Tensor({1, kGrid, kGrid, kGrid}, grid.occ));
        tape_.set_value(pose_in_, nn::Tensor({7}, normalize_pose(pose)));
    }

    double run_loss() {
        tape_.forward();
        return tape_.value(loss_).data[0];
    }

    // loss terms from the most recent forward pass
    double last_geo_term() const { return tape_.value(loss_geo_).data[0]; }
    double last_pose_term() const { return tape_.value(loss_pose_).data[0]; }

    std::vector<double> encode(const VoxelGrid& grid, const Pose& pose) {
        set_sample(grid, pose);
        tape_.forward();
        return tape_.value(z_).data;
    }

    struct Decoded {
        std::vector<double> voxel_probs;  // occupancy estimates in (0,1)
        std::vector<double> pose_norm;    // raw 7-vector in normalized units
        Pose pose;                        // de-normalized, quaternion unit length
    };

    Decoded last_decoded() const {
        Decoded d;
        d.voxel_probs = tape_.value(recon_).data;
        d.pose_norm = tape_.value(pose_out_).data;
        d.pose = denormalize_pose(d.pose_norm);
        return d;
    }

    Decoded decode(const std::vector<double>& z) {
        if (z.size() != kLatentDim)
            throw std::invalid_argument("latent length " + std::to_string(z.size()) + " != 48");
        sync_decoder();
        dec_tape_.set_value(dec_z_in_, nn::Tensor({kLatentDim}, z));
        dec_tape_.forward();
        Decoded d;
        d.voxel_probs = dec_tape_.value(dec_recon_).data;
        d.pose_norm = dec_tape_.value(dec_pose_).data;
        d.pose = denormalize_pose(d.pose_norm);
        return d;
    }

    Decoded reconstruct(const VoxelGrid& grid, const Pose& pose) {
        set_sample(grid, pose);
        tape_.forward();
        return last_decoded();
    }

private:
    void build_full(bool trainable, const nn::Checkpoint* from, Rng* rng) {
        nn::Wiring w{tape_, trainable, from, rng, {}};
        grid_in_ = tape_.input(nn::Tensor::zeros({1, kGrid, kGrid, kGrid}));
        pose_in_ = tape_.input(nn::Tensor::zeros({7}));

        const nn::ValueId conv_out = nn::conv_encoder(w, grid_in_, {1, 8, 16, 32}, "enc");
        const nn::ValueId flat = tape_.reshape(conv_out, {256});
        const nn::ValueId gw = w.weights("enc.fc.w", {kGeoDim, 256}, 256, kGeoDim);
        const nn::ValueId gb = w.zeros("enc.fc.b", {kGeoDim});
        const nn::ValueId fg = tape_.fully_connected(flat, gw, gb);
        const nn::ValueId fp = nn::fc_pair(w, pose_in_, 16, kPoseDim, "enc_pose");
        z_ = tape_.concat(fg, fp);

        auto [recon, pose_out] = build_decoder_graph(w, z_);
        recon_ = recon;
        pose_out_ = pose_out;

        const nn::ValueId grid_flat = tape_.reshape(grid_in_, {kVoxels});
        const nn::ValueId recon_flat = tape_.reshape(recon_, {kVoxels});
        loss_geo_ = tape_.mse_loss(recon_flat, grid_flat);
        loss_pose_ = tape_.mse_loss(pose_out_, pose_in_);
        loss_ = tape_.add(loss_geo_, loss_pose_);
        full_bound_ = std::move(w.bound);
    }

    std::pair<nn::ValueId, nn::ValueId> build_decoder_graph(nn::Wiring& w, nn::ValueId z) {
        const nn::ValueId zg = w.tape.slice(z, 0, kGeoDim);
        const nn::ValueId zp = w.tape.slice(z, kGeoDim, kPoseDim);
        const nn::ValueId recon = nn::conv_decoder(w, zg, {32, 16, 8, 1}, 2, "dec", nn::kOccupancyPriorLogit);
        const nn::ValueId pose_out = nn::fc_pair(w, zp, 16, 7, "dec_pose");
        return {recon, pose_out};
    }

    void build_decoder(const nn::Checkpoint* from, Rng* rng) {
        nn::Wiring w{dec_tape_, /*trainable=*/false, from, rng, {}};
        dec_z_in_ = dec_tape_.input(nn::Tensor::zeros({kLatentDim}));
        auto [recon, pose_out] = build_decoder_graph(w, dec_z_in_);
        dec_recon_ = recon;
        dec_pose_ = pose_out;
        dec_bound_ = std::move(w.bound);
    }

    void sync_decoder() {
        std::map<std::string, nn::ValueId> full;
        for (const auto& [name, id] : full_bound_) full[name] = id;
        for (const auto& [name, id] : dec_bound_) {
            const auto it = full.find(name);
            if (it != full.end()) dec_tape_.value(id).data = tape_.value(it->second).data;
        }
    }

    nn::Tape tape_, dec_tape_;
    std::vector<std::pair<std::string, nn::ValueId>> full_bound_, dec_bound_;
    nn::ValueId grid_in_{}, pose_in_{}, z_{}, recon_{}, pose_out_{}, loss_{}, loss_geo_{}, loss_pose_{};
    nn::ValueId dec_z_in_{}, dec_recon_{}, dec_pose_{};
};

// Standalone pose decoder sharing the gripper autoencoder's weights; maps the
// 8 pose-feature entries of a gripper latent back to a normalized pose.
class PoseHead {
public:
    explicit PoseHead(const nn::Checkpoint& ae2_ck) {
        nn::Wiring w{tape_, /*trainable=*/false, &ae2_ck, nullptr, {}};
        in_ = tape_.input(nn::Tensor::zeros({Ae2::kPoseDim}));
        out_ = nn::fc_pair(w, in_, 16, 7, "dec_pose");
    }

    std::vector<double> run_normalized(const std::vector<double>& fp) {
        if (fp.size() != Ae2::kPoseDim)
            throw std::invalid_argument("pose feature length " + std::to_string(fp.size()) + " != 8");
        tape_.set_value(in_, nn::Tensor({Ae2::kPoseDim}, fp));
        tape_.forward();
        return tape_.value(out_).data;
    }

    Pose run(const std::vector<double>& fp) { return denormalize_pose(run_normalized(fp)); }

private:
    nn::Tape tape_;
    nn::ValueId in_{}, out_{};
};

// ---- evaluation ----

struct Ae2Scores {
    double geo_acc = 0.0;            // percent of voxels correct
    double pose_ok_rate = 0.0;       // percent of poses within (1 voxel, 10 deg)
    double combined = 0.0;           // 50/50 blend of the two
    double mean_pos_err_voxels = 0.0;
    double mean_quat_angle_deg = 0.0;
    double mean_pose_norm_err = 0.0;  // L2 error in normalized pose units
};

constexpr double kPosTolMeters = kPoseScale / 16.0;  // one voxel edge
constexpr double kAngleTolDeg = 10.0;

inline Ae2Scores evaluate_ae2(Ae2& model, const std::vector<GripperSample>& data,
                              const std::vector<std::size_t>& idx) {
    if (idx.empty()) throw std::invalid_argument("evaluation set is empty");
    Ae2Scores s;
    for (const std::size_t i : idx) {
        const auto& g = data[i];
        const auto d = model.reconstruct(g.grid, g.pose);
        s.geo_acc += voxel_accuracy(d.voxel_probs, g.grid.occ);
        const double pos_err = (d.pose.r - g.pose.r).norm();
        const double ang_deg = d.pose.q.angle_to(g.pose.q) * 180.0 / M_PI;
        const bool ok = pos_err <= kPosTolMeters && ang_deg <= kAngleTolDeg;
        s.pose_ok_rate += ok ? 100.0 : 0.0;
        s.mean_pos_err_voxels += pos_err / kPosTolMeters;
        s.mean_quat_angle_deg += ang_deg;
        const auto pn = normalize_pose(g.pose);
        double e2 = 0.0;
        for (std::size_t k = 0; k < 7; ++k) {
            const double dd = d.pose_norm[k] - pn[k];
            e2 += dd * dd;
        }
        s.mean_pose_norm_err += std::sqrt(e2);
    }
    const double n = static_cast<double>(idx.size());
    s.geo_acc /= n;
    s.pose_ok_rate /= n;
    s.mean_pos_err_voxels /= n;
    s.mean_quat_angle_deg /= n;
    s.mean_pose_norm_err /= n;
    s.combined = 0.5 * s.geo_acc + 0.5 * s.pose_ok_rate;
    return s;
}

struct TrainedAe2 {
    nn::Checkpoint checkpoint;
    Ae2Scores best;  // scores at the best validation epoch
    int epochs_run = 0;
    bool nan_aborted = false;
};

inline TrainedAe2 train_ae2(const std::vector<GripperSample>& data, const nn::TrainConfig& cfg,
                            const std::string& csv_path) {
    if (data.size() < 2) throw std::invalid_argument("need at least 2 samples to train");
    Ae2 model(derive_seed(cfg.seed, "ae2-init"));

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
    CsvWriter csv(csv_path, {"epoch", "train_loss", "val_loss", "val_geo_acc", "val_combined_acc",
                             "val_pose_norm_err", "val_pose_pos_err_voxels", "val_pose_quat_angle_deg"});

    TrainedAe2 out;
    auto best = nn::snapshot_params(model.tape());
    double best_combined = -1.0;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        Rng erng(derive_seed(cfg.seed, "ae2-epoch", static_cast<std::uint64_t>(epoch)));
        auto order = split.train;
        erng.shuffle(order);

        double train_loss = 0.0;
        bool blew_up = false;
        for (std::size_t i = 0; i < order.size(); ++i) {
            const auto& g = data[order[i]];
            model.set_sample(g.grid, g.pose);
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

        double val_loss = 0.0;
        for (const std::size_t vi : split.val) {
            model.set_sample(data[vi].grid, data[vi].pose);
            val_loss += model.run_loss();
        }
        val_loss /= static_cast<double>(split.val.size());
        const Ae2Scores sc = evaluate_ae2(model, data, split.val);

        csv.row({static_cast<double>(epoch), train_loss, val_loss, sc.geo_acc, sc.combined,
                 sc.mean_pose_norm_err, sc.mean_pos_err_voxels, sc.mean_quat_angle_deg});
        out.epochs_run = epoch + 1;

        // prefer the higher combined score; with a pose bar in play, the
        // pose fit decides among epochs already past the accuracy stop
        bool better;
        if (cfg.stop_pose_err > 0.0 && cfg.stop_val_acc > 0.0) {
            const bool cur_q = sc.combined >= cfg.stop_val_acc;
            const bool best_q = best_combined >= cfg.stop_val_acc;
            if (cur_q != best_q)
                better = cur_q;
            else if (cur_q)
                better = sc.mean_pose_norm_err < out.best.mean_pose_norm_err;
            else
                better = sc.combined > best_combined;
        } else {
            better = sc.combined > best_combined ||
                     (sc.combined == best_combined &&
                      sc.mean_pose_norm_err < out.best.mean_pose_norm_err);
        }
        if (better) {
            best_combined = sc.combined;
            out.best = sc;
            best = nn::snapshot_params(model.tape());
        }
        if (cfg.stop_val_acc > 0.0 && sc.combined >= cfg.stop_val_acc &&
            (cfg.stop_pose_err <= 0.0 || sc.mean_pose_norm_err <= cfg.stop_pose_err))
            break;
    }

    nn::restore_params(model.tape(), best);
    model.save_into(out.checkpoint);
    return out;
}

}  // namespace gg
