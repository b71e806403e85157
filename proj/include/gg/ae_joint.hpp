#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "gg/ae_gripper.hpp"
#include "gg/ae_target.hpp"
#include "gg/checkpoint.hpp"
#include "gg/csv.hpp"
#include "gg/nn_blocks.hpp"
#include "gg/train.hpp"

namespace gg {

// Joint latent layout: [target code | gripper code], gripper code itself
// being [geometry features | pose features].
constexpr int kTargetLatentDim = 32;
constexpr int kGripperLatentDim = 48;
constexpr int kJointDim = kTargetLatentDim + kGripperLatentDim;  // 80
constexpr int kCompressedDim = 48;
constexpr int kPoseFeatOffset = kTargetLatentDim + 40;  // 72

inline std::vector<double> concat_latents(const std::vector<double>& z_t,
                                          const std::vector<double>& z_g) {
    if (z_t.size() != kTargetLatentDim)
        throw std::invalid_argument("target latent length " + std::to_string(z_t.size()) + " != 32");
    if (z_g.size() != kGripperLatentDim)
        throw std::invalid_argument("gripper latent length " + std::to_string(z_g.size()) + " != 48");
    std::vector<double> out;
    out.reserve(kJointDim);
    out.insert(out.end(), z_t.begin(), z_t.end());
    out.insert(out.end(), z_g.begin(), z_g.end());
    return out;
}

inline std::pair<std::vector<double>, std::vector<double>> split_latents(
    const std::vector<double>& z_gt) {
    if (z_gt.size() != kJointDim)
        throw std::invalid_argument("joint latent length " + std::to_string(z_gt.size()) + " != 80");
    return {std::vector<double>(z_gt.begin(), z_gt.begin() + kTargetLatentDim),
            std::vector<double>(z_gt.begin() + kTargetLatentDim, z_gt.end())};
}

// Percent of elements reconstructed within tol standard deviations.
inline double latent_accuracy(const std::vector<double>& z, const std::vector<double>& z_hat,
                              const std::vector<double>& per_element_std, double tol = 0.1) {
    if (z.size() != z_hat.size() || z.size() != per_element_std.size())
        throw std::invalid_argument("latent accuracy needs equal-length inputs");
    std::size_t ok = 0;
    for (std::size_t i = 0; i < z.size(); ++i)
        ok += (std::abs(z[i] - z_hat[i]) <= tol * per_element_std[i]);
    return 100.0 * static_cast<double>(ok) / static_cast<double>(z.size());
}

// Third-stage autoencoder: compresses the 80-dim joint latent to 48 and back.
// The loss keeps both halves faithful and runs the frozen gripper pose
// decoder over the reconstructed pose features so pose integrity is scored in
// pose space, not just latent space.
class Ae3 {
public:
    // Fresh trainable model; pose-decoder weights are copied out of the
    // trained gripper autoencoder checkpoint and frozen.
    Ae3(std::uint64_t init_seed, double alpha, double beta, nn::Normalizer latent_norm,
        const nn::Checkpoint& ae2_ck)
        : alpha_(alpha), beta_(beta), norm_(std::move(latent_norm)) {
        check_weights(alpha_, beta_);
        Rng rng(init_seed);
        build_full(/*trainable=*/true, nullptr, &ae2_ck, &rng);
        build_decoder(nullptr, &rng);
        sync_decoder();
    }

    explicit Ae3(const nn::Checkpoint& ck)
        : alpha_(ck.get_scalar("meta.alpha")),
          beta_(ck.get_scalar("meta.beta")),
          norm_(nn::Normalizer::load(ck, "norm.latent")) {
        check_weights(alpha_, beta_);
        build_full(/*trainable=*/false, &ck, &ck, nullptr);
        build_decoder(&ck, nullptr);
    }

    static Ae3 load(const std::string& path) { return Ae3(nn::Checkpoint::load(path)); }

    void save_into(nn::Checkpoint& ck) const {
        for (const auto& [name, id] : full_bound_) ck.add(name, tape_.value(id));
        norm_.save_into(ck, "norm.latent");
        ck.add("meta.alpha", nn::Tensor::scalar(alpha_));
        ck.add("meta.beta", nn::Tensor::scalar(beta_));
        ck.add("meta.compressed_dim", nn::Tensor::scalar(kCompressedDim));
    }

    void save(const std::string& path) const {
        nn::Checkpoint ck;
        save_into(ck);
        ck.save(path);
    }

    nn::Tape& tape() { return tape_; }
    nn::ValueId loss_id() const { return loss_; }
    double alpha() const { return alpha_; }
    double beta() const { return beta_; }
    const nn::Normalizer& latent_norm() const { return norm_; }

    void set_sample(const std::vector<double>& z_gt) {
        if (z_gt.size() != kJointDim)
            throw std::invalid_argument("joint latent length " + std::to_string(z_gt.size()) + " != 80");
        tape_.set_value(z_in_, nn::Tensor({kJointDim}, norm_.apply(z_gt)));
    }

    double run_loss() {
        tape_.forward();
        return tape_.value(loss_).data[0];
    }

    std::vector<double> encode(const std::vector<double>& z_gt) {
        set_sample(z_gt);
        tape_.forward();
        return tape_.value(z_c_).data;
    }

    std::vector<double> decode(const std::vector<double>& z_c) {
        if (z_c.size() != kCompressedDim)
            throw std::invalid_argument("compressed latent length " + std::to_string(z_c.size()) +
                                        " != 48");
        sync_decoder();
        dec_tape_.set_value(dec_z_in_, nn::Tensor({kCompressedDim}, z_c));
        dec_tape_.forward();
        return norm_.invert(dec_tape_.value(dec_out_).data);
    }

    std::vector<double> round_trip(const std::vector<double>& z_gt) {
        set_sample(z_gt);
        tape_.forward();
        return norm_.invert(tape_.value(z_hat_).data);
    }

private:
    static void check_weights(double alpha, double beta) {
        if (!(alpha > 0.0) || !(beta > 0.0))
            throw std::invalid_argument("loss weights must be positive (alpha = " +
                                        std::to_string(alpha) + ", beta = " + std::to_string(beta) + ")");
    }

    // Two fully-connected layers with a relu between, reusing already-bound
    // parameter ids (so the frozen pose decoder can run on two inputs).
    nn::ValueId apply_fc_pair(nn::ValueId x, nn::ValueId w1, nn::ValueId b1, nn::ValueId w2,
                              nn::ValueId b2) {
        const nn::ValueId h = tape_.relu(tape_.fully_connected(x, w1, b1));
        return tape_.fully_connected(h, w2, b2);
    }

    void build_full(bool trainable, const nn::Checkpoint* from, const nn::Checkpoint* pose_src,
                    Rng* rng) {
        nn::Wiring w{tape_, trainable, from, rng, {}};
        z_in_ = tape_.input(nn::Tensor::zeros({kJointDim}));
        z_c_ = nn::fc_pair(w, z_in_, 64, kCompressedDim, "enc");
        z_hat_ = nn::fc_pair(w, z_c_, 64, kJointDim, "dec");

        const nn::ValueId l_recon = tape_.mse_loss(z_hat_, z_in_);
        const nn::ValueId zt_hat = tape_.slice(z_hat_, 0, kTargetLatentDim);
        const nn::ValueId zt = tape_.slice(z_in_, 0, kTargetLatentDim);
        const nn::ValueId zg_hat = tape_.slice(z_hat_, kTargetLatentDim, kGripperLatentDim);
        const nn::ValueId zg = tape_.slice(z_in_, kTargetLatentDim, kGripperLatentDim);
        // length-weighted partial terms: their sum equals the full
        // reconstruction term exactly
        const double wt = static_cast<double>(kTargetLatentDim) / kJointDim;
        const double wg = static_cast<double>(kGripperLatentDim) / kJointDim;
        const nn::ValueId l_t = tape_.scale(tape_.mse_loss(zt_hat, zt), wt);
        const nn::ValueId l_g = tape_.scale(tape_.mse_loss(zg_hat, zg), wg);

        // frozen pose decoder from the gripper autoencoder (pose_src is
        // always a checkpoint, so these binds load rather than zero-fill)
        nn::Wiring wf{tape_, /*trainable=*/false, pose_src, rng, {}};
        const nn::ValueId pw1 = wf.zeros("dec_pose.fc1.w", {16, 8});
        const nn::ValueId pb1 = wf.zeros("dec_pose.fc1.b", {16});
        const nn::ValueId pw2 = wf.zeros("dec_pose.fc2.w", {7, 16});
        const nn::ValueId pb2 = wf.zeros("dec_pose.fc2.b", {7});

        // the network sees z-scored latents; the pose decoder expects raw
        // pose features, so undo the scaling with a frozen diagonal layer
        nn::Tensor dw = nn::Tensor::zeros({8, 8});
        nn::Tensor db = nn::Tensor::zeros({8});
        for (int i = 0; i < 8; ++i) {
            dw.data[i * 8 + i] = norm_.std[kPoseFeatOffset + i];
            db.data[i] = norm_.mean[kPoseFeatOffset + i];
        }
        const nn::ValueId denorm_w = tape_.input(dw);
        const nn::ValueId denorm_b = tape_.input(db);

        const nn::ValueId fp_hat = tape_.slice(z_hat_, kPoseFeatOffset, 8);
        const nn::ValueId fp_true = tape_.slice(z_in_, kPoseFeatOffset, 8);
        const nn::ValueId pose_hat =
            apply_fc_pair(tape_.fully_connected(fp_hat, denorm_w, denorm_b), pw1, pb1, pw2, pb2);
        const nn::ValueId pose_true =
            apply_fc_pair(tape_.fully_connected(fp_true, denorm_w, denorm_b), pw1, pb1, pw2, pb2);
        const nn::ValueId l_pose = tape_.mse_loss(pose_hat, pose_true);
        pose_hat_ = pose_hat;

        loss_ = tape_.add(
            l_recon, tape_.add(tape_.scale(tape_.add(l_t, l_g), alpha_), tape_.scale(l_pose, beta_)));
        l_recon_ = l_recon;
        l_t_ = l_t;
        l_g_ = l_g;
        l_pose_ = l_pose;

        full_bound_ = std::move(w.bound);
        for (auto& kv : wf.bound) full_bound_.push_back(std::move(kv));
    }

    void build_decoder(const nn::Checkpoint* from, Rng* rng) {
        nn::Wiring w{dec_tape_, /*trainable=*/false, from, rng, {}};
        dec_z_in_ = dec_tape_.input(nn::Tensor::zeros({kCompressedDim}));
        dec_out_ = nn::fc_pair(w, dec_z_in_, 64, kJointDim, "dec");
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

public:
    // individual loss terms from the most recent forward pass (diagnostics)
    double last_recon_term() const { return tape_.value(l_recon_).data[0]; }
    double last_target_term() const { return tape_.value(l_t_).data[0]; }
    double last_gripper_term() const { return tape_.value(l_g_).data[0]; }
    double last_pose_term() const { return tape_.value(l_pose_).data[0]; }

private:
    nn::Tape tape_, dec_tape_;
    std::vector<std::pair<std::string, nn::ValueId>> full_bound_, dec_bound_;
    nn::ValueId z_in_{}, z_c_{}, z_hat_{}, pose_hat_{}, loss_{};
    nn::ValueId l_recon_{}, l_t_{}, l_g_{}, l_pose_{};
    nn::ValueId dec_z_in_{}, dec_out_{};
    double alpha_, beta_;
    nn::Normalizer norm_;
};

// Encodes every (target, gripper) pair into an 80-dim joint latent. Pairing
// cycles through grippers so every target appears once.
inline std::vector<std::vector<double>> build_latent_dataset(const std::vector<TargetSample>& targets,
                                                             const std::vector<GripperSample>& grippers,
                                                             Ae1& ae1, Ae2& ae2) {
    if (targets.empty() || grippers.empty())
        throw std::invalid_argument("latent dataset needs non-empty inputs");
    std::vector<std::vector<double>> out;
    out.reserve(targets.size());
    for (std::size_t i = 0; i < targets.size(); ++i) {
        const auto& t = targets[i];
        const auto& g = grippers[i % grippers.size()];
        out.push_back(concat_latents(ae1.encode(t.grid, t.props), ae2.encode(g.grid, g.pose)));
    }
    return out;
}

struct Ae3TrainConfig {
    nn::TrainConfig base;
    double alpha = 0.5;
    double beta = 1.0;
};

struct TrainedAe3 {
    nn::Checkpoint checkpoint;
    double best_val_acc = 0.0;
    double final_val_loss = 0.0;
    double final_rel_err = 0.0;
    int epochs_run = 0;
    bool nan_aborted = false;
};

// Mean over samples of ||z_hat - z|| / ||z|| in raw latent units.
inline double round_trip_rel_err(Ae3& model, const std::vector<std::vector<double>>& latents,
                                 const std::vector<std::size_t>& idx) {
    if (idx.empty()) throw std::invalid_argument("evaluation set is empty");
    double acc = 0.0;
    for (const std::size_t i : idx) {
        const auto& z = latents[i];
        const auto zh = model.round_trip(z);
        double num = 0.0, den = 0.0;
        for (std::size_t k = 0; k < z.size(); ++k) {
            const double d = zh[k] - z[k];
            num += d * d;
            den += z[k] * z[k];
        }
        acc += std::sqrt(num) / std::max(std::sqrt(den), 1e-12);
    }
    return acc / static_cast<double>(idx.size());
}

inline TrainedAe3 train_ae3(const std::vector<std::vector<double>>& latents,
                            const nn::Checkpoint& ae2_ck, const Ae3TrainConfig& cfg,
                            const std::string& csv_path) {
    if (latents.size() < 2) throw std::invalid_argument("need at least 2 samples to train");
    Ae3 model(derive_seed(cfg.base.seed, "ae3-init"), cfg.alpha, cfg.beta,
              nn::Normalizer::fit(latents), ae2_ck);

    nn::Split split;
    if (cfg.base.val_fraction > 0.0) {
        split = nn::Split::make(latents.size(), cfg.base.seed, cfg.base.val_fraction);
    } else {
        for (std::size_t i = 0; i < latents.size(); ++i) {
            split.train.push_back(i);
            split.val.push_back(i);
        }
    }

    nn::Adam opt(model.tape(), cfg.base.lr);
    nn::GradAccumulator acc(model.tape());
    CsvWriter csv(csv_path, {"epoch", "train_loss", "val_loss", "val_latent_acc", "val_rel_err"});

    TrainedAe3 out;
    auto best = nn::snapshot_params(model.tape());
    double best_loss = std::numeric_limits<double>::infinity();
    const auto& stds = model.latent_norm().std;

    for (int epoch = 0; epoch < cfg.base.epochs; ++epoch) {
        Rng erng(derive_seed(cfg.base.seed, "ae3-epoch", static_cast<std::uint64_t>(epoch)));
        auto order = split.train;
        erng.shuffle(order);

        double train_loss = 0.0;
        bool blew_up = false;
        for (std::size_t i = 0; i < order.size(); ++i) {
            model.set_sample(latents[order[i]]);
            const double loss = model.run_loss();
            if (!std::isfinite(loss)) {
                blew_up = true;
                break;
            }
            model.tape().backward(model.loss_id());
            acc.add_current();
            train_loss += loss;
            if (acc.pending() == cfg.base.batch || i + 1 == order.size()) {
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
            const auto& z = latents[vi];
            model.set_sample(z);
            val_loss += model.run_loss();
            const auto zh = model.round_trip(z);
            val_acc += latent_accuracy(z, zh, stds);
            double num = 0.0, den = 0.0;
            for (std::size_t k = 0; k < z.size(); ++k) {
                const double d = zh[k] - z[k];
                num += d * d;
                den += z[k] * z[k];
            }
            val_rel += std::sqrt(num) / std::max(std::sqrt(den), 1e-12);
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
            out.final_rel_err = val_rel;
            best = nn::snapshot_params(model.tape());
        }
        if (cfg.base.stop_val_acc > 0.0 && val_acc >= cfg.base.stop_val_acc) break;
    }

    nn::restore_params(model.tape(), best);
    model.save_into(out.checkpoint);

    // per-dimension spread of the compressed codes over the training set;
    // downstream optimizers scale their exploration from it
    {
        std::vector<double> mean(kCompressedDim, 0.0), var(kCompressedDim, 0.0);
        std::vector<std::vector<double>> codes;
        codes.reserve(latents.size());
        for (const auto& z : latents) codes.push_back(model.encode(z));
        for (const auto& c : codes)
            for (int k = 0; k < kCompressedDim; ++k) mean[k] += c[k];
        for (double& m : mean) m /= static_cast<double>(codes.size());
        for (const auto& c : codes)
            for (int k = 0; k < kCompressedDim; ++k) var[k] += (c[k] - mean[k]) * (c[k] - mean[k]);
        nn::Tensor std_t = nn::Tensor::zeros({kCompressedDim});
        for (int k = 0; k < kCompressedDim; ++k)
            std_t.data[k] = std::max(std::sqrt(var[k] / static_cast<double>(codes.size())), 1e-9);
        out.checkpoint.add("stats.zc_std", std::move(std_t));
    }
    return out;
}

// Decoder-only runner for the optimization hot path: compressed latent in,
// raw joint latent out, no training graph attached.
class Ae3Decoder {
public:
    explicit Ae3Decoder(const nn::Checkpoint& ae3_ck) : norm_(nn::Normalizer::load(ae3_ck, "norm.latent")) {
        nn::Wiring w{tape_, /*trainable=*/false, &ae3_ck, nullptr, {}};
        in_ = tape_.input(nn::Tensor::zeros({kCompressedDim}));
        out_ = nn::fc_pair(w, in_, 64, kJointDim, "dec");
    }

    std::vector<double> decode(const std::vector<double>& z_c) {
        if (z_c.size() != kCompressedDim)
            throw std::invalid_argument("compressed latent length " + std::to_string(z_c.size()) +
                                        " != 48");
        tape_.set_value(in_, nn::Tensor({kCompressedDim}, z_c));
        tape_.forward();
        return norm_.invert(tape_.value(out_).data);
    }

    // Encoder companion so agents can seed from a known-good grasp.
    const nn::Normalizer& latent_norm() const { return norm_; }

private:
    nn::Tape tape_;
    nn::ValueId in_{}, out_{};
    nn::Normalizer norm_;
};

class Ae3Encoder {
public:
    explicit Ae3Encoder(const nn::Checkpoint& ae3_ck) : norm_(nn::Normalizer::load(ae3_ck, "norm.latent")) {
        nn::Wiring w{tape_, /*trainable=*/false, &ae3_ck, nullptr, {}};
        in_ = tape_.input(nn::Tensor::zeros({kJointDim}));
        out_ = nn::fc_pair(w, in_, 64, kCompressedDim, "enc");
    }

    std::vector<double> encode(const std::vector<double>& z_gt) {
        if (z_gt.size() != kJointDim)
            throw std::invalid_argument("joint latent length " + std::to_string(z_gt.size()) + " != 80");
        tape_.set_value(in_, nn::Tensor({kJointDim}, norm_.apply(z_gt)));
        tape_.forward();
        return tape_.value(out_).data;
    }

private:
    nn::Tape tape_;
    nn::ValueId in_{}, out_{};
    nn::Normalizer norm_;
};

}  // namespace gg
