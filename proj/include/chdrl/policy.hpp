#pragma once

#include <vector>

#include "chdrl/env.hpp"
#include "chdrl/numerics.hpp"

namespace chdrl {

inline constexpr double kLogStdMin = -20.0;
inline constexpr double kLogStdMax = 2.0;

/// Affine map from tanh output in (-1, 1) to the env action box.
struct ActionBounds {
    Vec mid;
    Vec half;

    static ActionBounds from(const EnvSpec& spec)
    {
        return {0.5 * (spec.act_high + spec.act_low), 0.5 * (spec.act_high - spec.act_low)};
    }
    Vec low() const { return mid - half; }
    Vec high() const { return mid + half; }
};

/// Network layout shared by every policy and value net in a run.
struct NetworkShape {
    Index obs_dim = 0;
    Index act_dim = 0;
    std::vector<Index> hidden{64, 64};

    std::vector<Index> mean_sizes() const { return with_ends(obs_dim, act_dim); }
    std::vector<Index> value_sizes() const { return with_ends(obs_dim, 1); }
    std::vector<Index> q_sizes() const { return with_ends(obs_dim + act_dim, 1); }

private:
    std::vector<Index> with_ends(Index in, Index out) const
    {
        std::vector<Index> s{in};
        s.insert(s.end(), hidden.begin(), hidden.end());
        s.push_back(out);
        return s;
    }
};

/// The transferable pre-squash mean action network mu(s).
struct MeanFunction {
    Mlp<double> net;

    static MeanFunction initialized(const NetworkShape& shape, Rng& rng)
    {
        return {Mlp<double>::initialized(shape.mean_sizes(), rng)};
    }
    Vec operator()(const Vec& obs) const { return net.forward(obs); }
};

/// Gaussian noise model around the mean. PPO keeps a learned log-std vector,
/// SAC a second network producing per-state log-std.
class StochasticHead {
public:
    enum class Kind { StateIndependent, StateDependent };

    static StochasticHead state_independent(Index act_dim, double initial_log_std);
    static StochasticHead state_dependent(const NetworkShape& shape, Rng& rng);

    Kind kind() const { return kind_; }
    /// Clamped to [kLogStdMin, kLogStdMax].
    Vec log_std(const Vec& obs) const;

    Vec& log_std_vector() { return log_std_; }
    const Vec& log_std_vector() const { return log_std_; }
    Mlp<double>& log_std_net() { return net_; }
    const Mlp<double>& log_std_net() const { return net_; }

private:
    Kind kind_ = Kind::StateIndependent;
    Vec log_std_;
    Mlp<double> net_;
};

struct ActionSample {
    Vec action;
    double log_prob = 0.0;
    Vec pre_squash;
};

Vec squash(const Vec& pre_squash, const ActionBounds& bounds);

/// sum_i log(half_i * (1 - tanh(u_i)^2)), evaluated without cancellation.
double squash_log_det(const Vec& pre_squash, const ActionBounds& bounds);

/// Log-density of the squashed action given its pre-squash value u.
double squashed_gaussian_log_prob(const Vec& pre_squash, const Vec& mean, const Vec& log_std,
                                  const ActionBounds& bounds);

Vec act_deterministic(const MeanFunction& mean, const Vec& obs, const ActionBounds& bounds);
ActionSample act_stochastic_sac(const MeanFunction& mean, const StochasticHead& head, const Vec& obs,
                                const ActionBounds& bounds, Rng& rng);
ActionSample act_stochastic_ppo(const MeanFunction& mean, const StochasticHead& head, const Vec& obs,
                                const ActionBounds& bounds, Rng& rng);

/// Bitwise copy of src's parameters into dst; throws if the layouts differ.
void transfer_mean(const MeanFunction& src, MeanFunction& dst);
void copy_network(const Mlp<double>& src, Mlp<double>& dst);

} // namespace chdrl
