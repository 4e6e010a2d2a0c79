#pragma once

#include "chdrl/memory.hpp"
#include "chdrl/numerics.hpp"
#include "chdrl/policy.hpp"

namespace chdrl {

struct SacConfig {
    double gamma = 0.99;
    double tau = 0.005;
    double alpha = 0.2;
    double lr = 3e-4;
    std::size_t batch_size = 128;
    // Own environment steps acted uniformly at random before the policy takes over.
    long start_steps = 500;
};

struct SacLosses {
    double q1 = 0.0;
    double q2 = 0.0;
    double value = 0.0;
    double policy = 0.0;
};

/// Policy objective mean(alpha log pi(a~|s) - min_i Q_i(s, a~)) for fixed
/// reparameterization noise, with its gradients.
struct SacPolicyObjective {
    double loss = 0.0;
    Gradient<double> mean_grad;
    Gradient<double> head_grad;
    // Pieces the value target reuses.
    Mat actions;
    Vec log_prob;
    Vec min_q;
};

/// Soft actor-critic with twin Q networks and an explicit state-value
/// network whose target copy is tracked by Polyak averaging.
struct SacAgent {
    SacConfig config;
    ActionBounds bounds;
    MeanFunction mean;
    StochasticHead head;
    Mlp<double> q1;
    Mlp<double> q2;
    Mlp<double> value;
    Mlp<double> value_target;

    AdamState<double> mean_opt;
    AdamState<double> head_opt;
    AdamState<double> q1_opt;
    AdamState<double> q2_opt;
    AdamState<double> value_opt;

    long own_steps = 0;
    long updates = 0;

    SacAgent(const NetworkShape& shape, ActionBounds action_bounds, SacConfig cfg, Rng& init_rng);

    /// Uniform random during the first start_steps own steps, then squashed Gaussian.
    Vec act(const Vec& obs, Rng& rng);

    /// y = r + gamma (1 - d) V_target(s'), one entry per batch column.
    Vec q_targets(const Batch& batch) const;

    SacPolicyObjective policy_objective(const Mat& states, const Mat& noise) const;

    /// One gradient step on every network followed by a soft target update.
    SacLosses update(const Batch& batch, Rng& rng);

    void soft_update();

    /// Accept a transferred mean and value function; optimizer moments of both restart.
    void accept_transfer(const MeanFunction& new_mean, const Mlp<double>* new_value);
};

} // namespace chdrl
