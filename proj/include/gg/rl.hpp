#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "gg/ae_gripper.hpp"
#include "gg/ae_joint.hpp"
#include "gg/ae_target.hpp"
#include "gg/grasp.hpp"
#include "gg/power.hpp"

namespace gg {

// Grasp-improvement agents: both optimize a perturbation with the same
// policy-search engine, one in the compressed joint latent space, one
// directly over the 7-dimensional pose vector.

struct GraspRlConfig {
    PowerConfig power;
    double penalty_weight = 0.01;  // latent round-trip fidelity terms
    double squeeze_force = 10.0;   // Newtons applied by the oracle
    double sigma0_scale = 0.5;     // exploration std as a fraction of the action spread
};

inline double squared_distance(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw std::invalid_argument("vector length mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return s;
}

// Explores additive perturbations of the compressed code of the current
// (target, gripper) pair. Each rollout decodes the perturbed code back to
// the joint latent, reads the grasp pose out of its pose-feature block, and
// scores the real geometry at that decoded pose. Latent drift away from the
// encoded pair is charged to the reward.
class LatentGraspAgent {
public:
    LatentGraspAgent(const nn::Checkpoint& ae1_ck, const nn::Checkpoint& ae2_ck,
                     const nn::Checkpoint& ae3_ck, GraspRlConfig cfg)
        : cfg_(std::move(cfg)),
          ae1_(ae1_ck),
          ae2_(ae2_ck),
          enc_(ae3_ck),
          dec_(ae3_ck),
          pose_head_(ae2_ck) {
        if (!ae3_ck.has("stats.zc_std"))
            throw std::runtime_error(
                "joint-model checkpoint lacks compressed-code statistics "
                "(stats.zc_std); retrain the joint stage to regenerate it");
        const nn::Tensor zc_std = ae3_ck.get("stats.zc_std");
        if (zc_std.shape != std::vector<int>{kCompressedDim})
            throw std::runtime_error("compressed-code statistics have the wrong shape");
        sigma0_.assign(zc_std.data.begin(), zc_std.data.end());
        for (double& s : sigma0_) s = std::max(s * cfg_.sigma0_scale, 1e-9);
    }

    void set_pair(const TargetSample& target, const GripperSample& gripper) {
        target_ = &target;
        gripper_ = &gripper;
        z_t_ = ae1_.encode(target.grid, target.props);
        z_g_ = ae2_.encode(gripper.grid, gripper.pose);
        z_c_ = enc_.encode(concat_latents(z_t_, z_g_));
    }

    int action_dim() const { return kCompressedDim; }
    const std::vector<double>& sigma0() const { return sigma0_; }
    const std::vector<double>& code() const { return z_c_; }

    // Pure function of the perturbation: replaying a stored record's delta
    // reproduces its reward bit-identically.
    RolloutRecord rollout(const std::vector<double>& delta, int episode) const {
        require_pair();
        std::vector<double> zc = z_c_;
        if (delta.size() != zc.size()) throw std::invalid_argument("perturbation dimension mismatch");
        for (std::size_t i = 0; i < zc.size(); ++i) zc[i] += delta[i];

        std::vector<double> z_hat = dec_.decode(zc);
        const auto [zt_hat, zg_hat] = split_latents(z_hat);
        const std::vector<double> fp(zg_hat.begin() + Ae2::kGeoDim, zg_hat.end());
        const Pose pose = pose_head_.run(fp);

        RolloutRecord rec;
        rec.delta = delta;
        rec.episode = episode;
        rec.penalty_t = cfg_.penalty_weight * squared_distance(zt_hat, z_t_);
        rec.penalty_g = cfg_.penalty_weight * squared_distance(zg_hat, z_g_);

        const GraspOutcome out = simulate_grasp(*target_, *gripper_, pose, cfg_.squeeze_force);
        rec.valid = out.valid;
        rec.success = out.lifted;
        rec.stability = out.stability;
        rec.reward = out.valid ? grasp_quality(out) - rec.penalty_t - rec.penalty_g : 0.0;
        return rec;
    }

    PowerRunResult run(std::uint64_t seed, const std::string& csv_path = "",
                       const std::vector<double>* warm_mean = nullptr) const {
        require_pair();
        PolicyParams init;
        init.mean = warm_mean ? *warm_mean : std::vector<double>(sigma0_.size(), 0.0);
        init.sigma = sigma0_;
        PowerConfig pc = cfg_.power;
        pc.seed = seed;
        return run_power(std::move(init), pc,
                         [this](const std::vector<double>& d, int ep) { return rollout(d, ep); },
                         csv_path);
    }

private:
    void require_pair() const {
        if (!target_ || !gripper_) throw std::logic_error("agent has no (target, gripper) pair set");
    }

    GraspRlConfig cfg_;
    mutable Ae1 ae1_;
    mutable Ae2 ae2_;
    mutable Ae3Encoder enc_;
    mutable Ae3Decoder dec_;
    mutable PoseHead pose_head_;
    const TargetSample* target_ = nullptr;
    const GripperSample* gripper_ = nullptr;
    std::vector<double> z_t_, z_g_, z_c_;
    std::vector<double> sigma0_;
};

// Per-dimension spread of the raw 7-component pose vectors in a gripper set;
// the pose-space agent scales its exploration from it the same way the
// latent agent scales from the compressed-code spread.
inline std::vector<double> pose_spread(const std::vector<GripperSample>& grippers) {
    if (grippers.empty()) throw std::invalid_argument("need at least one gripper sample");
    std::vector<double> mean(7, 0.0), var(7, 0.0);
    for (const auto& g : grippers) {
        const auto v = g.pose.to_vector7();
        for (int k = 0; k < 7; ++k) mean[k] += v[k];
    }
    for (double& m : mean) m /= static_cast<double>(grippers.size());
    for (const auto& g : grippers) {
        const auto v = g.pose.to_vector7();
        for (int k = 0; k < 7; ++k) var[k] += (v[k] - mean[k]) * (v[k] - mean[k]);
    }
    std::vector<double> sd(7);
    for (int k = 0; k < 7; ++k)
        sd[k] = std::max(std::sqrt(var[k] / static_cast<double>(grippers.size())), 1e-9);
    return sd;
}

// Same engine, but the action is an additive perturbation of the gripper's
// recorded pose vector; the quaternion block is renormalized before use.
class BaselineGraspAgent {
public:
    BaselineGraspAgent(std::vector<double> pose_sigma0, GraspRlConfig cfg) : cfg_(std::move(cfg)) {
        if (pose_sigma0.size() != 7) throw std::invalid_argument("pose exploration needs 7 dimensions");
        sigma0_ = std::move(pose_sigma0);
        for (double& s : sigma0_) s = std::max(s * cfg_.sigma0_scale, 1e-9);
    }

    void set_pair(const TargetSample& target, const GripperSample& gripper) {
        target_ = &target;
        gripper_ = &gripper;
        const std::array<double, 7> v0 = gripper.pose.to_vector7();
        pose0_.assign(v0.begin(), v0.end());
    }

    int action_dim() const { return 7; }
    const std::vector<double>& sigma0() const { return sigma0_; }

    RolloutRecord rollout(const std::vector<double>& delta, int episode) const {
        require_pair();
        if (delta.size() != 7) throw std::invalid_argument("perturbation dimension mismatch");
        std::array<double, 7> v;
        for (int k = 0; k < 7; ++k) v[k] = pose0_[k] + delta[k];
        const Pose pose = Pose::from_vector7(v);  // renormalizes the quaternion

        RolloutRecord rec;
        rec.delta = delta;
        rec.episode = episode;
        const GraspOutcome out = simulate_grasp(*target_, *gripper_, pose, cfg_.squeeze_force);
        rec.valid = out.valid;
        rec.success = out.lifted;
        rec.stability = out.stability;
        rec.reward = out.valid ? grasp_quality(out) : 0.0;
        return rec;
    }

    PowerRunResult run(std::uint64_t seed, const std::string& csv_path = "",
                       const std::vector<double>* warm_mean = nullptr) const {
        require_pair();
        PolicyParams init;
        init.mean = warm_mean ? *warm_mean : std::vector<double>(7, 0.0);
        init.sigma = sigma0_;
        PowerConfig pc = cfg_.power;
        pc.seed = seed;
        return run_power(std::move(init), pc,
                         [this](const std::vector<double>& d, int ep) { return rollout(d, ep); },
                         csv_path);
    }

private:
    void require_pair() const {
        if (!target_ || !gripper_) throw std::logic_error("agent has no (target, gripper) pair set");
    }

    GraspRlConfig cfg_;
    const TargetSample* target_ = nullptr;
    const GripperSample* gripper_ = nullptr;
    std::vector<double> pose0_ = std::vector<double>(7, 0.0);
    std::vector<double> sigma0_;
};

// One pair swap, both agents, many seeds: train to the success threshold on
// the first pair, swap in the second, and count episodes to re-reach the
// threshold from the carried-over policy mean (exploration reset to sigma0).
struct AdaptationConfig {
    GraspRlConfig rl;
    int n_seeds = 10;
    std::uint64_t master_seed = 0;
};

struct SeedAdaptation {
    std::uint64_t seed = 0;
    int latent_before = -1;    // episodes to threshold, -1 = cap reached
    int latent_after = -1;
    int baseline_before = -1;
    int baseline_after = -1;
    bool latent_converged = false;    // both phases
    bool baseline_converged = false;  // both phases
    double improvement_pct = 0.0;     // meaningful only when both converged
};

struct AdaptationReport {
    std::vector<SeedAdaptation> seeds;
    int comparable_seeds = 0;       // both agents fully converged
    int latent_faster_count = 0;    // among comparable seeds
    double median_improvement_pct = 0.0;  // over comparable seeds
};

inline double median_of(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

struct PairRef {
    const TargetSample& target;
    const GripperSample& gripper;
};

// Generic over anything with set_pair(target, gripper) and
// run(seed, csv_path, warm_mean) -> PowerRunResult, so the bookkeeping
// (seed derivation, warm starts, comparability gating, the median) can be
// tested with scripted agents as well as the real ones.
template <typename LatentAgent, typename BaselineAgent>
AdaptationReport run_adaptation(LatentAgent& latent, BaselineAgent& baseline, const PairRef& before,
                                const PairRef& after, int n_seeds, std::uint64_t master_seed,
                                const std::string& csv_prefix = "") {
    if (n_seeds <= 0) throw std::invalid_argument("need at least one seed");

    AdaptationReport rep;
    std::vector<double> improvements;
    for (int s = 0; s < n_seeds; ++s) {
        SeedAdaptation sa;
        sa.seed = derive_seed(master_seed, "adapt-seed", static_cast<std::uint64_t>(s));
        const auto path = [&](const char* tag) {
            return csv_prefix.empty() ? std::string{}
                                      : csv_prefix + tag + "_seed" + std::to_string(s) + ".csv";
        };

        latent.set_pair(before.target, before.gripper);
        const auto lb = latent.run(derive_seed(sa.seed, "latent-before"), path("latent_before"));
        latent.set_pair(after.target, after.gripper);
        const auto la =
            latent.run(derive_seed(sa.seed, "latent-after"), path("latent_after"), &lb.policy.mean);
        sa.latent_before = lb.episodes_to_threshold;
        sa.latent_after = la.episodes_to_threshold;
        sa.latent_converged = lb.converged && la.converged;

        baseline.set_pair(before.target, before.gripper);
        const auto bb = baseline.run(derive_seed(sa.seed, "baseline-before"), path("baseline_before"));
        baseline.set_pair(after.target, after.gripper);
        const auto ba = baseline.run(derive_seed(sa.seed, "baseline-after"), path("baseline_after"),
                                     &bb.policy.mean);
        sa.baseline_before = bb.episodes_to_threshold;
        sa.baseline_after = ba.episodes_to_threshold;
        sa.baseline_converged = bb.converged && ba.converged;

        if (sa.latent_converged && sa.baseline_converged) {
            ++rep.comparable_seeds;
            sa.improvement_pct = 100.0 * (sa.baseline_after - sa.latent_after) /
                                 static_cast<double>(sa.baseline_after);
            improvements.push_back(sa.improvement_pct);
            if (sa.latent_after < sa.baseline_after) ++rep.latent_faster_count;
        }
        rep.seeds.push_back(sa);
    }
    rep.median_improvement_pct = median_of(improvements);
    return rep;
}

inline AdaptationReport adaptation_experiment(const PairRef& before, const PairRef& after,
                                              const nn::Checkpoint& ae1_ck,
                                              const nn::Checkpoint& ae2_ck,
                                              const nn::Checkpoint& ae3_ck,
                                              const std::vector<double>& pose_sigma0,
                                              const AdaptationConfig& cfg,
                                              const std::string& csv_prefix = "") {
    LatentGraspAgent latent(ae1_ck, ae2_ck, ae3_ck, cfg.rl);
    BaselineGraspAgent baseline(pose_sigma0, cfg.rl);
    return run_adaptation(latent, baseline, before, after, cfg.n_seeds, cfg.master_seed, csv_prefix);
}

}  // namespace gg
