#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "gg/csv.hpp"
#include "gg/rng.hpp"

namespace gg {

// Episodic reward-weighted policy search: explore with Gaussian perturbations
// around a mean, then pull the mean toward the perturbations in proportion to
// their rewards. Task-agnostic — the episode itself is an injected callable.

struct PolicyParams {
    std::vector<double> mean;   // current perturbation estimate
    std::vector<double> sigma;  // per-dimension exploration std-dev, > 0
};

inline void validate_policy(const PolicyParams& p) {
    if (p.mean.empty() || p.mean.size() != p.sigma.size())
        throw std::invalid_argument("policy mean/sigma must be non-empty and equal length");
    for (const double s : p.sigma)
        if (!(s > 0.0)) throw std::invalid_argument("exploration sigma must stay positive");
}

struct RolloutRecord {
    std::vector<double> delta;  // the perturbation that was executed
    double reward = 0.0;
    bool success = false;  // task-level success (a lift, for grasping)
    bool valid = true;     // false when the action itself was inadmissible
    double stability = 0.0;
    double penalty_t = 0.0;  // action-fidelity penalties entering the reward
    double penalty_g = 0.0;
    int episode = -1;
};

inline std::vector<double> sample_perturbation(const PolicyParams& policy, Rng& rng) {
    validate_policy(policy);
    std::vector<double> d(policy.mean.size());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = rng.normal(policy.mean[i], policy.sigma[i]);
    return d;
}

// Reward-weighted mean update:
//   theta_new = theta_old + eta * sum_i (R_i / sum_j R_j) * (delta_i - theta_old)
// Rewards are shifted by min(0, min R) first so the weights are non-negative
// without disturbing already-admissible reward vectors; if every shifted
// weight is zero there is no information and the mean stays put. Sigma is
// not touched here — decay is the caller's schedule.
inline PolicyParams power_update(const PolicyParams& theta_old,
                                 const std::vector<RolloutRecord>& rollouts, double eta) {
    validate_policy(theta_old);
    if (rollouts.empty()) throw std::invalid_argument("power_update needs at least one rollout");
    const std::size_t m = theta_old.mean.size();
    for (const auto& r : rollouts)
        if (r.delta.size() != m)
            throw std::invalid_argument("rollout perturbation length " + std::to_string(r.delta.size()) +
                                        " does not match policy dimension " + std::to_string(m));

    double lo = 0.0;
    for (const auto& r : rollouts) lo = std::min(lo, r.reward);
    double total = 0.0;
    for (const auto& r : rollouts) total += r.reward - lo;

    PolicyParams next = theta_old;
    if (total == 0.0) return next;
    for (const auto& r : rollouts) {
        const double w = (r.reward - lo) / total;
        for (std::size_t i = 0; i < m; ++i) next.mean[i] += eta * w * (r.delta[i] - theta_old.mean[i]);
    }
    return next;
}

// True iff the mean success over the most recent window reaches the bar;
// shorter histories are simply not converged yet.
inline bool check_termination(const std::vector<char>& success_history, int window, double bar) {
    if (window <= 0) throw std::invalid_argument("termination window must be positive");
    if (static_cast<int>(success_history.size()) < window) return false;
    int hits = 0;
    for (std::size_t i = success_history.size() - window; i < success_history.size(); ++i)
        hits += success_history[i] != 0;
    return static_cast<double>(hits) / window >= bar;
}

struct PowerConfig {
    int rollouts_per_update = 20;  // one episode = one rollout
    double eta = 0.5;
    int episode_cap = 2000;
    int success_window = 50;      // M
    double success_bar = 0.8;     // R_success
    double sigma_gamma = 0.995;   // per-update decay
    double sigma_floor_frac = 0.02;  // of the initial sigma
    int elite_pool = 10;          // best-k rollouts reused across updates
    std::uint64_t seed = 0;
};

struct PowerRunResult {
    PolicyParams policy;
    int episodes_run = 0;
    int episodes_to_threshold = -1;  // -1: never reached within the cap
    bool converged = false;
    int updates_applied = 0;
    std::vector<double> rewards;     // per episode
    std::vector<char> successes;     // per episode
};

// The engine. rollout_fn(delta, episode) -> RolloutRecord evaluates one
// episode; it must be a pure function of its arguments (all stochasticity
// lives in the perturbation sampling, giving per-episode replay). A non-null
// csv_path logs one row per episode.
template <typename RolloutFn>
PowerRunResult run_power(PolicyParams initial, const PowerConfig& cfg, RolloutFn&& rollout_fn,
                         const std::string& csv_path = "") {
    validate_policy(initial);
    if (cfg.rollouts_per_update <= 0 || cfg.episode_cap <= 0 || cfg.elite_pool <= 0)
        throw std::invalid_argument("power config counts must be positive");
    if (!(cfg.sigma_gamma > 0.0 && cfg.sigma_gamma <= 1.0))
        throw std::invalid_argument("sigma decay factor must lie in (0, 1]");

    std::vector<double> sigma_floor(initial.sigma.size());
    for (std::size_t i = 0; i < sigma_floor.size(); ++i)
        sigma_floor[i] = cfg.sigma_floor_frac * initial.sigma[i];

    std::optional<CsvWriter> csv;
    if (!csv_path.empty())
        csv.emplace(csv_path, std::vector<std::string>{"episode", "reward", "lifted", "stability",
                                                       "penalty_T", "penalty_G", "sigma_mean"});

    PowerRunResult out;
    out.policy = std::move(initial);
    std::vector<RolloutRecord> pool;  // kept sorted by descending reward

    for (int episode = 0; episode < cfg.episode_cap; ++episode) {
        Rng rng(derive_seed(cfg.seed, "rollout", static_cast<std::uint64_t>(episode)));
        RolloutRecord rec = rollout_fn(sample_perturbation(out.policy, rng), episode);
        rec.episode = episode;

        out.rewards.push_back(rec.reward);
        out.successes.push_back(rec.success ? 1 : 0);
        if (csv) {
            double sig = 0.0;
            for (const double s : out.policy.sigma) sig += s;
            sig /= static_cast<double>(out.policy.sigma.size());
            csv->row({static_cast<double>(episode), rec.reward, rec.success ? 1.0 : 0.0,
                      rec.stability, rec.penalty_t, rec.penalty_g, sig});
        }

        // elite pool: best rewards seen so far, ties kept oldest-first
        pool.push_back(std::move(rec));
        std::stable_sort(pool.begin(), pool.end(),
                         [](const RolloutRecord& a, const RolloutRecord& b) { return a.reward > b.reward; });
        if (static_cast<int>(pool.size()) > cfg.elite_pool) pool.resize(cfg.elite_pool);

        out.episodes_run = episode + 1;
        if ((episode + 1) % cfg.rollouts_per_update == 0) {
            PolicyParams next = power_update(out.policy, pool, cfg.eta);
            for (std::size_t i = 0; i < next.sigma.size(); ++i)
                next.sigma[i] = std::max(next.sigma[i] * cfg.sigma_gamma, sigma_floor[i]);
            out.policy = std::move(next);
            ++out.updates_applied;
        }

        if (check_termination(out.successes, cfg.success_window, cfg.success_bar)) {
            out.converged = true;
            out.episodes_to_threshold = episode + 1;
            break;
        }
    }
    return out;
}

}  // namespace gg
