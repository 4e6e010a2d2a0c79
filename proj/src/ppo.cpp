#include "chdrl/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>

namespace chdrl {

GaeResult gae_advantages(std::span<const double> rewards, std::span<const double> values, std::span<const bool> dones,
                         double gamma, double lambda)
{
    const std::size_t n = rewards.size();
    if (values.size() != n + 1)
        throw Error("gae: values must have one more entry than rewards (" + std::to_string(values.size()) + " vs " +
                    std::to_string(n) + ")");
    if (dones.size() != n)
        throw Error("gae: dones must match rewards in length");
    GaeResult out;
    out.advantages.assign(n, 0.0);
    out.returns.assign(n, 0.0);
    double next_adv = 0.0;
    for (std::size_t k = n; k-- > 0;) {
        const double live = dones[k] ? 0.0 : 1.0;
        const double delta = rewards[k] + gamma * live * values[k + 1] - values[k];
        next_adv = delta + gamma * lambda * live * next_adv;
        out.advantages[k] = next_adv;
        out.returns[k] = next_adv + values[k];
    }
    return out;
}

double clipped_surrogate(double ratio, double advantage, double clip)
{
    const double clipped = std::clamp(ratio, 1.0 - clip, 1.0 + clip);
    return std::min(ratio * advantage, clipped * advantage);
}

PpoAgent::PpoAgent(const NetworkShape& shape, ActionBounds action_bounds, PpoConfig cfg, Rng& init_rng)
    : config(cfg), bounds(std::move(action_bounds)), mean(MeanFunction::initialized(shape, init_rng)),
      head(StochasticHead::state_independent(shape.act_dim, cfg.initial_log_std)),
      value(Mlp<double>::initialized(shape.value_sizes(), init_rng)), mean_opt(make_adam(mean.net, cfg.lr)),
      log_std_opt(shape.act_dim, cfg.lr), value_opt(make_adam(value, cfg.lr))
{
    if (!(config.clip > 0.0 && config.clip < 1.0))
        throw Error("ppo.clip must lie in (0, 1)");
    if (config.epochs < 1 || config.minibatch < 1)
        throw Error("ppo.epochs and ppo.minibatch must be positive");
}

ActionSample PpoAgent::act(const Vec& obs, Rng& rng) const { return act_stochastic_ppo(mean, head, obs, bounds, rng); }

double PpoAgent::value_of(const Vec& obs) const { return value.forward(obs)[0]; }

void PpoAgent::record(const Vec& obs, const ActionSample& sample, double reward, bool done)
{
    rollout.push_back({obs, sample.pre_squash, sample.log_prob, reward, value_of(obs), done});
}

PpoLosses PpoAgent::update(double bootstrap_value, Rng& rng)
{
    if (rollout.empty())
        throw Error("PPO update needs a non-empty rollout");
    const std::size_t n = rollout.size();
    const Index obs_dim = rollout.front().s.size();
    const Index act_dim = rollout.front().pre_squash.size();

    std::vector<double> rewards(n);
    std::vector<double> values(n + 1);
    auto dones = std::make_unique<bool[]>(n);
    for (std::size_t k = 0; k < n; ++k) {
        rewards[k] = rollout[k].reward;
        values[k] = rollout[k].value;
        dones[k] = rollout[k].done;
    }
    values[n] = rollout.back().done ? 0.0 : bootstrap_value;
    const GaeResult gae = gae_advantages(rewards, values, std::span<const bool>(dones.get(), n), config.gamma,
                                         config.lambda);

    Vec adv = Eigen::Map<const Vec>(gae.advantages.data(), static_cast<Index>(n));
    const Vec ret = Eigen::Map<const Vec>(gae.returns.data(), static_cast<Index>(n));
    if (n > 1) {
        const double mu = adv.mean();
        const double sd = std::sqrt((adv.array() - mu).square().mean());
        adv = (adv.array() - mu) / (sd + 1e-8);
    }

    Mat states(obs_dim, static_cast<Index>(n));
    Mat pre(act_dim, static_cast<Index>(n));
    Vec old_logp(static_cast<Index>(n));
    Vec log_det(static_cast<Index>(n));
    for (std::size_t k = 0; k < n; ++k) {
        const auto j = static_cast<Index>(k);
        states.col(j) = rollout[k].s;
        pre.col(j) = rollout[k].pre_squash;
        old_logp[j] = rollout[k].log_prob;
        log_det[j] = squash_log_det(rollout[k].pre_squash, bounds);
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    PpoLosses losses;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double pol_sum = 0.0;
        double val_sum = 0.0;
        std::size_t clipped = 0;
        for (std::size_t start = 0; start < n; start += config.minibatch) {
            const std::size_t stop = std::min(n, start + config.minibatch);
            const auto m = static_cast<Index>(stop - start);
            const double inv_m = 1.0 / static_cast<double>(m);
            Mat s(obs_dim, m);
            Mat u(act_dim, m);
            Vec lp_old(m);
            Vec a(m);
            Vec r(m);
            Vec ld(m);
            for (Index j = 0; j < m; ++j) {
                const auto k = static_cast<Index>(order[start + static_cast<std::size_t>(j)]);
                s.col(j) = states.col(k);
                u.col(j) = pre.col(k);
                lp_old[j] = old_logp[k];
                a[j] = adv[k];
                r[j] = ret[k];
                ld[j] = log_det[k];
            }

            Tape<double> mean_tape;
            const Mat mu = mean.net.forward(s, &mean_tape);
            const Vec raw_ls = head.log_std_vector();
            const Vec ls = raw_ls.cwiseMax(kLogStdMin).cwiseMin(kLogStdMax);
            const Vec inv_var = (-2.0 * ls.array()).exp();
            const Mat diff = u - mu;

            Mat d_mu(act_dim, m);
            Vec d_ls = Vec::Zero(act_dim);
            for (Index j = 0; j < m; ++j) {
                double lp = -ld[j];
                for (Index i = 0; i < act_dim; ++i)
                    lp += -0.5 * diff(i, j) * diff(i, j) * inv_var[i] - ls[i] - 0.91893853320467274178;
                const double ratio = std::exp(lp - lp_old[j]);
                pol_sum -= clipped_surrogate(ratio, a[j], config.clip) * inv_m;
                const bool active = !((a[j] > 0 && ratio > 1.0 + config.clip) || (a[j] < 0 && ratio < 1.0 - config.clip));
                if (!active)
                    ++clipped;
                const double d_lp = active ? -ratio * a[j] * inv_m : 0.0;
                for (Index i = 0; i < act_dim; ++i) {
                    d_mu(i, j) = d_lp * diff(i, j) * inv_var[i];
                    d_ls[i] += d_lp * (diff(i, j) * diff(i, j) * inv_var[i] - 1.0);
                }
            }
            for (Index i = 0; i < act_dim; ++i)
                if (raw_ls[i] < kLogStdMin || raw_ls[i] > kLogStdMax)
                    d_ls[i] = 0.0;

            Tape<double> value_tape;
            const Vec v_err = value.forward(s, &value_tape).row(0).transpose() - r;
            val_sum += v_err.squaredNorm() * inv_m;
            const Gradient<double> g_value = value.backward(value_tape, (2.0 * inv_m) * v_err.transpose());
            const Gradient<double> g_mean = mean.net.backward(mean_tape, d_mu);

            mean_opt.apply(mean.net.parameters(), g_mean.flat);
            log_std_opt.apply(head.log_std_vector(), d_ls);
            value_opt.apply(value.parameters(), g_value.flat);
        }
        const double batches = std::ceil(static_cast<double>(n) / static_cast<double>(config.minibatch));
        losses.policy = pol_sum / batches;
        losses.value = val_sum / batches;
        losses.clip_fraction = static_cast<double>(clipped) / static_cast<double>(n);
    }
    rollout.clear();
    ++updates;
    return losses;
}

void PpoAgent::accept_transfer(const MeanFunction& new_mean, const Mlp<double>* new_value)
{
    transfer_mean(new_mean, mean);
    mean_opt.reset();
    if (new_value) {
        copy_network(*new_value, value);
        value_opt.reset();
    }
}

} // namespace chdrl
