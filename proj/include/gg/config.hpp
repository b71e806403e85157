#pragma once

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "gg/ae_joint.hpp"
#include "gg/rl.hpp"
#include "gg/train.hpp"

namespace gg {

// One flat document drives every command. Values come from three layers,
// later layers winning: compiled defaults, the --config file, then
// command-line overrides. The merged result is persisted next to each
// command's outputs so a run can always be reproduced from its artifacts.
struct ExperimentConfig {
    std::uint64_t master_seed = 0;
    std::string out_dir = "run";

    // Dataset synthesis.
    std::int64_t targets = 2000;
    std::int64_t grippers = 500;
    std::int64_t perturbs_per_base = 5;

    // Latent widths are architectural constants in this build; the keys are
    // accepted (and persisted) so configs are self-describing, but any value
    // other than the compiled width is rejected.
    std::int64_t target_latent_dim = kTargetLatentDim;
    std::int64_t gripper_latent_dim = kGripperLatentDim;
    std::int64_t joint_dim = kJointDim;
    std::int64_t compressed_dim = kCompressedDim;

    // Training. stop_* of -1 disables early stopping; val_fraction <= 0
    // validates on the training set itself (memorization runs).
    double val_fraction = 0.1;
    std::int64_t ae1_epochs = 25;
    std::int64_t ae1_batch = 8;
    double ae1_lr = 1e-3;
    double ae1_stop_acc = -1.0;
    std::int64_t ae2_epochs = 150;
    std::int64_t ae2_batch = 4;
    double ae2_lr = 2e-3;
    double ae2_stop_acc = -1.0;
    double ae2_stop_pose_err = -1.0;
    std::int64_t ae3_epochs = 300;
    std::int64_t ae3_batch = 8;
    double ae3_lr = 1e-3;
    double ae3_stop_acc = -1.0;
    double ae3_alpha = 0.5;
    double ae3_beta = 1.0;

    // Policy search.
    std::int64_t rl_rollouts_per_update = 20;
    double rl_eta = 0.5;
    std::int64_t rl_episode_cap = 2000;
    std::int64_t rl_success_window = 50;
    double rl_success_bar = 0.8;
    double rl_sigma_gamma = 0.995;
    double rl_sigma_floor_frac = 0.02;
    std::int64_t rl_elite_pool = 10;
    double rl_penalty_weight = 0.01;
    double rl_squeeze_force = 10.0;
    double rl_sigma0_scale = 0.5;
    std::int64_t rl_target = 0;
    std::int64_t rl_gripper = 0;

    // Adaptation experiment: train on the `before` pair, swap to `after`,
    // count episodes to re-reach the success bar.
    std::int64_t adapt_seeds = 10;
    std::int64_t adapt_before_target = 0;
    std::int64_t adapt_before_gripper = 0;
    std::int64_t adapt_after_target = 0;
    std::int64_t adapt_after_gripper = 1;
};

namespace config_detail {

using FieldPtr = std::variant<std::uint64_t ExperimentConfig::*, std::int64_t ExperimentConfig::*,
                              double ExperimentConfig::*, std::string ExperimentConfig::*>;

struct FieldDef {
    const char* key;
    FieldPtr ptr;
};

inline const std::vector<FieldDef>& fields() {
    static const std::vector<FieldDef> defs = {{
        {"master_seed", &ExperimentConfig::master_seed},
        {"out_dir", &ExperimentConfig::out_dir},
        {"targets", &ExperimentConfig::targets},
        {"grippers", &ExperimentConfig::grippers},
        {"perturbs_per_base", &ExperimentConfig::perturbs_per_base},
        {"target_latent_dim", &ExperimentConfig::target_latent_dim},
        {"gripper_latent_dim", &ExperimentConfig::gripper_latent_dim},
        {"joint_dim", &ExperimentConfig::joint_dim},
        {"compressed_dim", &ExperimentConfig::compressed_dim},
        {"val_fraction", &ExperimentConfig::val_fraction},
        {"ae1_epochs", &ExperimentConfig::ae1_epochs},
        {"ae1_batch", &ExperimentConfig::ae1_batch},
        {"ae1_lr", &ExperimentConfig::ae1_lr},
        {"ae1_stop_acc", &ExperimentConfig::ae1_stop_acc},
        {"ae2_epochs", &ExperimentConfig::ae2_epochs},
        {"ae2_batch", &ExperimentConfig::ae2_batch},
        {"ae2_lr", &ExperimentConfig::ae2_lr},
        {"ae2_stop_acc", &ExperimentConfig::ae2_stop_acc},
        {"ae2_stop_pose_err", &ExperimentConfig::ae2_stop_pose_err},
        {"ae3_epochs", &ExperimentConfig::ae3_epochs},
        {"ae3_batch", &ExperimentConfig::ae3_batch},
        {"ae3_lr", &ExperimentConfig::ae3_lr},
        {"ae3_stop_acc", &ExperimentConfig::ae3_stop_acc},
        {"ae3_alpha", &ExperimentConfig::ae3_alpha},
        {"ae3_beta", &ExperimentConfig::ae3_beta},
        {"rl_rollouts_per_update", &ExperimentConfig::rl_rollouts_per_update},
        {"rl_eta", &ExperimentConfig::rl_eta},
        {"rl_episode_cap", &ExperimentConfig::rl_episode_cap},
        {"rl_success_window", &ExperimentConfig::rl_success_window},
        {"rl_success_bar", &ExperimentConfig::rl_success_bar},
        {"rl_sigma_gamma", &ExperimentConfig::rl_sigma_gamma},
        {"rl_sigma_floor_frac", &ExperimentConfig::rl_sigma_floor_frac},
        {"rl_elite_pool", &ExperimentConfig::rl_elite_pool},
        {"rl_penalty_weight", &ExperimentConfig::rl_penalty_weight},
        {"rl_squeeze_force", &ExperimentConfig::rl_squeeze_force},
        {"rl_sigma0_scale", &ExperimentConfig::rl_sigma0_scale},
        {"rl_target", &ExperimentConfig::rl_target},
        {"rl_gripper", &ExperimentConfig::rl_gripper},
        {"adapt_seeds", &ExperimentConfig::adapt_seeds},
        {"adapt_before_target", &ExperimentConfig::adapt_before_target},
        {"adapt_before_gripper", &ExperimentConfig::adapt_before_gripper},
        {"adapt_after_target", &ExperimentConfig::adapt_after_target},
        {"adapt_after_gripper", &ExperimentConfig::adapt_after_gripper},
    }};
    return defs;
}

inline std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

inline std::uint64_t parse_u64(const std::string& key, const std::string& raw) {
    std::uint64_t v = 0;
    const auto [p, ec] = std::from_chars(raw.data(), raw.data() + raw.size(), v);
    if (ec != std::errc{} || p != raw.data() + raw.size())
        throw std::invalid_argument("config key '" + key + "' needs an unsigned integer, got '" + raw + "'");
    return v;
}

inline std::int64_t parse_i64(const std::string& key, const std::string& raw) {
    std::int64_t v = 0;
    const auto [p, ec] = std::from_chars(raw.data(), raw.data() + raw.size(), v);
    if (ec != std::errc{} || p != raw.data() + raw.size())
        throw std::invalid_argument("config key '" + key + "' needs an integer, got '" + raw + "'");
    return v;
}

inline double parse_f64(const std::string& key, const std::string& raw) {
    if (raw.empty()) throw std::invalid_argument("config key '" + key + "' has an empty value");
    char* end = nullptr;
    const double v = std::strtod(raw.c_str(), &end);
    if (end != raw.c_str() + raw.size())
        throw std::invalid_argument("config key '" + key + "' needs a number, got '" + raw + "'");
    return v;
}

// Shortest decimal form that parses back to the same double, so persisted
// configs re-load bit-identically.
inline std::string format_f64(double v) {
    char buf[64];
    for (int prec = 1; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v) break;
    }
    return buf;
}

}  // namespace config_detail

// Applies one "key = value" assignment. Unknown keys are an error: a typo in
// a config must fail loudly, not silently run the defaults.
inline void set_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& raw_value) {
    namespace cd = config_detail;
    const std::string value = cd::trim(raw_value);
    for (const auto& f : cd::fields()) {
        if (key != f.key) continue;
        std::visit(
            [&](auto member) {
                using T = std::remove_cvref_t<decltype(cfg.*member)>;
                if constexpr (std::is_same_v<T, std::uint64_t>)
                    cfg.*member = cd::parse_u64(key, value);
                else if constexpr (std::is_same_v<T, std::int64_t>)
                    cfg.*member = cd::parse_i64(key, value);
                else if constexpr (std::is_same_v<T, double>)
                    cfg.*member = cd::parse_f64(key, value);
                else
                    cfg.*member = value;
            },
            f.ptr);
        return;
    }
    throw std::invalid_argument("unknown config key '" + key + "'");
}

// Applies "key=value" (the command-line override form).
inline void apply_config_override(ExperimentConfig& cfg, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos)
        throw std::invalid_argument("override '" + assignment + "' is not of the form key=value");
    const std::string key = config_detail::trim(assignment.substr(0, eq));
    if (key.empty()) throw std::invalid_argument("override '" + assignment + "' has an empty key");
    set_config_value(cfg, key, assignment.substr(eq + 1));
}

// Parses a whole document: one assignment per line, '#' comments, blank
// lines ignored.
inline void apply_config_text(ExperimentConfig& cfg, const std::string& text) {
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = config_detail::trim(line);
        if (line.empty()) continue;
        try {
            apply_config_override(cfg, line);
        } catch (const std::invalid_argument& e) {
            throw std::invalid_argument("config line " + std::to_string(lineno) + ": " + e.what());
        }
    }
}

inline void apply_config_file(ExperimentConfig& cfg, const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::invalid_argument("cannot open config file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    apply_config_text(cfg, buf.str());
}

// Emits every field in registry order; the output re-parses to an identical
// config and is byte-stable across runs.
inline std::string serialize_config(const ExperimentConfig& cfg) {
    namespace cd = config_detail;
    std::string out;
    for (const auto& f : cd::fields()) {
        out += f.key;
        out += " = ";
        std::visit(
            [&](auto member) {
                using T = std::remove_cvref_t<decltype(cfg.*member)>;
                if constexpr (std::is_same_v<T, std::uint64_t> || std::is_same_v<T, std::int64_t>)
                    out += std::to_string(cfg.*member);
                else if constexpr (std::is_same_v<T, double>)
                    out += cd::format_f64(cfg.*member);
                else
                    out += cfg.*member;
            },
            f.ptr);
        out += '\n';
    }
    return out;
}

inline void validate_config(const ExperimentConfig& cfg) {
    const auto fail = [](const std::string& msg) { throw std::invalid_argument("config: " + msg); };
    if (cfg.out_dir.empty()) fail("out_dir must not be empty");
    if (cfg.targets < 1) fail("targets must be at least 1");
    if (cfg.grippers < 1) fail("grippers must be at least 1");
    if (cfg.perturbs_per_base < 0) fail("perturbs_per_base must be non-negative");
    if (cfg.target_latent_dim != kTargetLatentDim)
        fail("target_latent_dim is fixed at " + std::to_string(kTargetLatentDim) + " in this build");
    if (cfg.gripper_latent_dim != kGripperLatentDim)
        fail("gripper_latent_dim is fixed at " + std::to_string(kGripperLatentDim) + " in this build");
    if (cfg.joint_dim != kJointDim)
        fail("joint_dim is fixed at " + std::to_string(kJointDim) + " in this build");
    if (cfg.compressed_dim != kCompressedDim)
        fail("compressed_dim is fixed at " + std::to_string(kCompressedDim) + " in this build");
    if (cfg.val_fraction > 0.9) fail("val_fraction must leave at least 10% for training");
    const auto check_stage = [&](const char* name, std::int64_t epochs, std::int64_t batch, double lr) {
        const std::string s(name);
        if (epochs < 1) fail(s + "_epochs must be at least 1");
        if (batch < 1) fail(s + "_batch must be at least 1");
        if (!(lr > 0.0)) fail(s + "_lr must be positive");
    };
    check_stage("ae1", cfg.ae1_epochs, cfg.ae1_batch, cfg.ae1_lr);
    check_stage("ae2", cfg.ae2_epochs, cfg.ae2_batch, cfg.ae2_lr);
    check_stage("ae3", cfg.ae3_epochs, cfg.ae3_batch, cfg.ae3_lr);
    if (cfg.ae3_alpha < 0.0) fail("ae3_alpha must be non-negative");
    if (cfg.ae3_beta < 0.0) fail("ae3_beta must be non-negative");
    if (cfg.rl_rollouts_per_update < 1) fail("rl_rollouts_per_update must be at least 1");
    if (cfg.rl_eta < 0.0) fail("rl_eta must be non-negative");
    if (cfg.rl_episode_cap < 1) fail("rl_episode_cap must be at least 1");
    if (cfg.rl_success_window < 1) fail("rl_success_window must be at least 1");
    if (!(cfg.rl_success_bar > 0.0 && cfg.rl_success_bar <= 1.0)) fail("rl_success_bar must be in (0, 1]");
    if (!(cfg.rl_sigma_gamma > 0.0 && cfg.rl_sigma_gamma <= 1.0)) fail("rl_sigma_gamma must be in (0, 1]");
    if (!(cfg.rl_sigma_floor_frac > 0.0 && cfg.rl_sigma_floor_frac <= 1.0))
        fail("rl_sigma_floor_frac must be in (0, 1]");
    if (cfg.rl_elite_pool < 1) fail("rl_elite_pool must be at least 1");
    if (cfg.rl_penalty_weight < 0.0) fail("rl_penalty_weight must be non-negative");
    if (!(cfg.rl_squeeze_force > 0.0)) fail("rl_squeeze_force must be positive");
    if (!(cfg.rl_sigma0_scale > 0.0)) fail("rl_sigma0_scale must be positive");
    if (cfg.rl_target < 0) fail("rl_target must be a dataset index");
    if (cfg.rl_gripper < 0) fail("rl_gripper must be a dataset index");
    if (cfg.adapt_seeds < 1) fail("adapt_seeds must be at least 1");
    if (cfg.adapt_before_target < 0 || cfg.adapt_before_gripper < 0 || cfg.adapt_after_target < 0 ||
        cfg.adapt_after_gripper < 0)
        fail("adaptation pair selectors must be dataset indices");
}

// Stage configs, all deriving their seeds from master_seed by component name
// so any stage re-runs reproducibly on its own.
inline nn::TrainConfig ae1_train_config(const ExperimentConfig& c) {
    nn::TrainConfig t;
    t.epochs = static_cast<int>(c.ae1_epochs);
    t.batch = static_cast<int>(c.ae1_batch);
    t.lr = c.ae1_lr;
    t.seed = derive_seed(c.master_seed, "train-ae1");
    t.val_fraction = c.val_fraction;
    t.stop_val_acc = c.ae1_stop_acc;
    return t;
}

inline nn::TrainConfig ae2_train_config(const ExperimentConfig& c) {
    nn::TrainConfig t;
    t.epochs = static_cast<int>(c.ae2_epochs);
    t.batch = static_cast<int>(c.ae2_batch);
    t.lr = c.ae2_lr;
    t.seed = derive_seed(c.master_seed, "train-ae2");
    t.val_fraction = c.val_fraction;
    t.stop_val_acc = c.ae2_stop_acc;
    t.stop_pose_err = c.ae2_stop_pose_err;
    return t;
}

inline Ae3TrainConfig ae3_train_config(const ExperimentConfig& c) {
    Ae3TrainConfig t;
    t.base.epochs = static_cast<int>(c.ae3_epochs);
    t.base.batch = static_cast<int>(c.ae3_batch);
    t.base.lr = c.ae3_lr;
    t.base.seed = derive_seed(c.master_seed, "train-ae3");
    t.base.val_fraction = c.val_fraction;
    t.base.stop_val_acc = c.ae3_stop_acc;
    t.alpha = c.ae3_alpha;
    t.beta = c.ae3_beta;
    return t;
}

inline GraspRlConfig grasp_rl_config(const ExperimentConfig& c) {
    GraspRlConfig g;
    g.power.rollouts_per_update = static_cast<int>(c.rl_rollouts_per_update);
    g.power.eta = c.rl_eta;
    g.power.episode_cap = static_cast<int>(c.rl_episode_cap);
    g.power.success_window = static_cast<int>(c.rl_success_window);
    g.power.success_bar = c.rl_success_bar;
    g.power.sigma_gamma = c.rl_sigma_gamma;
    g.power.sigma_floor_frac = c.rl_sigma_floor_frac;
    g.power.elite_pool = static_cast<int>(c.rl_elite_pool);
    g.penalty_weight = c.rl_penalty_weight;
    g.squeeze_force = c.rl_squeeze_force;
    g.sigma0_scale = c.rl_sigma0_scale;
    return g;
}

}  // namespace gg
