#include "chdrl/policy.hpp"

#include <cmath>
#include <numbers>

namespace chdrl {

namespace {

// log(1 - tanh(u)^2) = 2 (log 2 - u - softplus(-2u))
double log_one_minus_tanh_sq(double u)
{
    const double x = -2.0 * u;
    const double softplus = x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
    return 2.0 * (std::numbers::ln2 - u - softplus);
}

ActionSample sample_squashed(const Vec& mu, const Vec& log_std, const ActionBounds& bounds, Rng& rng)
{
    Vec eps(mu.size());
    for (Index i = 0; i < eps.size(); ++i)
        eps[i] = draw_normal(rng);
    ActionSample s;
    s.pre_squash = mu + log_std.array().exp().matrix().cwiseProduct(eps);
    s.action = squash(s.pre_squash, bounds);
    s.log_prob = squashed_gaussian_log_prob(s.pre_squash, mu, log_std, bounds);
    return s;
}

} // namespace

StochasticHead StochasticHead::state_independent(Index act_dim, double initial_log_std)
{
    StochasticHead h;
    h.kind_ = Kind::StateIndependent;
    h.log_std_ = Vec::Constant(act_dim, initial_log_std);
    return h;
}

StochasticHead StochasticHead::state_dependent(const NetworkShape& shape, Rng& rng)
{
    StochasticHead h;
    h.kind_ = Kind::StateDependent;
    h.net_ = Mlp<double>::initialized(shape.mean_sizes(), rng);
    return h;
}

Vec StochasticHead::log_std(const Vec& obs) const
{
    const Vec raw = kind_ == Kind::StateIndependent ? log_std_ : net_.forward(obs);
    return raw.cwiseMax(kLogStdMin).cwiseMin(kLogStdMax);
}

Vec squash(const Vec& pre_squash, const ActionBounds& bounds)
{
    Vec a = bounds.mid + bounds.half.cwiseProduct(pre_squash.array().tanh().matrix());
    // tanh can round to exactly +-1; keep the result inside the box anyway.
    return a.cwiseMax(bounds.low()).cwiseMin(bounds.high());
}

double squash_log_det(const Vec& pre_squash, const ActionBounds& bounds)
{
    double total = 0.0;
    for (Index i = 0; i < pre_squash.size(); ++i)
        total += std::log(bounds.half[i]) + log_one_minus_tanh_sq(pre_squash[i]);
    return total;
}

double squashed_gaussian_log_prob(const Vec& pre_squash, const Vec& mean, const Vec& log_std,
                                  const ActionBounds& bounds)
{
    constexpr double half_log_two_pi = 0.91893853320467274178;
    double gauss = 0.0;
    for (Index i = 0; i < pre_squash.size(); ++i) {
        const double z = (pre_squash[i] - mean[i]) / std::exp(log_std[i]);
        gauss += -0.5 * z * z - log_std[i] - half_log_two_pi;
    }
    return gauss - squash_log_det(pre_squash, bounds);
}

Vec act_deterministic(const MeanFunction& mean, const Vec& obs, const ActionBounds& bounds)
{
    return squash(mean(obs), bounds);
}

ActionSample act_stochastic_sac(const MeanFunction& mean, const StochasticHead& head, const Vec& obs,
                                const ActionBounds& bounds, Rng& rng)
{
    if (head.kind() != StochasticHead::Kind::StateDependent)
        throw Error("SAC sampling needs a state-dependent head");
    return sample_squashed(mean(obs), head.log_std(obs), bounds, rng);
}

ActionSample act_stochastic_ppo(const MeanFunction& mean, const StochasticHead& head, const Vec& obs,
                                const ActionBounds& bounds, Rng& rng)
{
    if (head.kind() != StochasticHead::Kind::StateIndependent)
        throw Error("PPO sampling needs a state-independent head");
    return sample_squashed(mean(obs), head.log_std(obs), bounds, rng);
}

void copy_network(const Mlp<double>& src, Mlp<double>& dst)
{
    if (!src.same_architecture(dst))
        throw Error("network architecture mismatch on transfer");
    dst.load(src.flatten());
}

void transfer_mean(const MeanFunction& src, MeanFunction& dst) { copy_network(src.net, dst.net); }

} // namespace chdrl
