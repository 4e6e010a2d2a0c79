#pragma once

#include <span>
#include <vector>

#include "chdrl/numerics.hpp"
#include "chdrl/policy.hpp"

namespace chdrl {

struct PpoConfig {
    double gamma = 0.99;
    double lambda = 0.97;
    double clip = 0.2;
    int epochs = 10;
    std::size_t minibatch = 64;
    double initial_log_std = -0.5;
    double lr = 3e-4;
};

struct GaeResult {
    std::vector<double> advantages;
    std::vector<double> returns;
};

/// delta_t = r_t + gamma (1 - d_t) V_{t+1} - V_t,
/// A_t = delta_t + gamma lambda (1 - d_t) A_{t+1}, returns = A + V.
/// values carries one bootstrap entry past the last reward.
GaeResult gae_advantages(std::span<const double> rewards, std::span<const double> values, std::span<const bool> dones,
                         double gamma, double lambda);

/// min(ratio A, clip(ratio, 1 - eps, 1 + eps) A)
double clipped_surrogate(double ratio, double advantage, double clip);

struct PpoLosses {
    double policy = 0.0;
    double value = 0.0;
    double clip_fraction = 0.0;
};

struct RolloutStep {
    Vec s;
    Vec pre_squash;
    double log_prob = 0.0;
    double reward = 0.0;
    double value = 0.0;
    bool done = false;
};

/// Clipped-surrogate policy gradient with a GAE critic, trained only on its
/// own freshly collected rollout.
struct PpoAgent {
    PpoConfig config;
    ActionBounds bounds;
    MeanFunction mean;
    StochasticHead head;
    Mlp<double> value;

    AdamState<double> mean_opt;
    AdamState<double> log_std_opt;
    AdamState<double> value_opt;

    std::vector<RolloutStep> rollout;
    long updates = 0;

    PpoAgent(const NetworkShape& shape, ActionBounds action_bounds, PpoConfig cfg, Rng& init_rng);

    ActionSample act(const Vec& obs, Rng& rng) const;
    double value_of(const Vec& obs) const;

    void record(const Vec& obs, const ActionSample& sample, double reward, bool done);

    /// Runs `epochs` passes of shuffled minibatches over the rollout, then
    /// clears it. bootstrap_value is V(s') after the last stored step (ignored
    /// when that step was terminal).
    PpoLosses update(double bootstrap_value, Rng& rng);

    /// Accept a transferred mean and value function; optimizer moments restart.
    /// The log-std vector is kept.
    void accept_transfer(const MeanFunction& new_mean, const Mlp<double>* new_value);
};

} // namespace chdrl
