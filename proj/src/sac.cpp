#include "chdrl/sac.hpp"

#include <cmath>

namespace chdrl {

namespace {

constexpr double kHalfLogTwoPi = 0.91893853320467274178;

Mat stack_rows(const Mat& top, const Mat& bottom)
{
    Mat out(top.rows() + bottom.rows(), top.cols());
    out << top, bottom;
    return out;
}

// Elementwise log(1 - tanh(u)^2), stable for large |u|.
Mat log_one_minus_tanh_sq(const Mat& u)
{
    const Eigen::ArrayXXd x = -2.0 * u.array();
    const Eigen::ArrayXXd softplus = x.max(0.0) + (-x.abs()).exp().log1p();
    return (2.0 * (std::log(2.0) - u.array() - softplus)).matrix();
}

} // namespace

SacAgent::SacAgent(const NetworkShape& shape, ActionBounds action_bounds, SacConfig cfg, Rng& init_rng)
    : config(cfg), bounds(std::move(action_bounds)), mean(MeanFunction::initialized(shape, init_rng)),
      head(StochasticHead::state_dependent(shape, init_rng)),
      q1(Mlp<double>::initialized(shape.q_sizes(), init_rng)), q2(Mlp<double>::initialized(shape.q_sizes(), init_rng)),
      value(Mlp<double>::initialized(shape.value_sizes(), init_rng)), value_target(value),
      mean_opt(make_adam(mean.net, cfg.lr)), head_opt(make_adam(head.log_std_net(), cfg.lr)),
      q1_opt(make_adam(q1, cfg.lr)), q2_opt(make_adam(q2, cfg.lr)), value_opt(make_adam(value, cfg.lr))
{
    if (!(config.alpha > 0.0))
        throw Error("sac.alpha must be positive");
    if (!(config.tau > 0.0 && config.tau <= 1.0))
        throw Error("sac.tau must lie in (0, 1]");
}

Vec SacAgent::act(const Vec& obs, Rng& rng)
{
    ++own_steps;
    if (own_steps <= config.start_steps) {
        Vec a(bounds.mid.size());
        for (Index i = 0; i < a.size(); ++i)
            a[i] = draw_uniform(rng, bounds.mid[i] - bounds.half[i], bounds.mid[i] + bounds.half[i]);
        return a;
    }
    return act_stochastic_sac(mean, head, obs, bounds, rng).action;
}

Vec SacAgent::q_targets(const Batch& batch) const
{
    const Vec v_next = value_target.forward(batch.s_next).row(0).transpose();
    return batch.r + config.gamma * (Vec::Ones(batch.size()) - batch.done).cwiseProduct(v_next);
}

SacPolicyObjective SacAgent::policy_objective(const Mat& states, const Mat& noise) const
{
    const Index n = states.cols();
    const double inv_n = 1.0 / static_cast<double>(n);
    const double alpha = config.alpha;

    Tape<double> mean_tape;
    Tape<double> head_tape;
    const Mat mu = mean.net.forward(states, &mean_tape);
    const Mat raw_log_std = head.log_std_net().forward(states, &head_tape);
    const Mat log_std = raw_log_std.cwiseMax(kLogStdMin).cwiseMin(kLogStdMax);
    const Mat std_dev = log_std.array().exp().matrix();
    const Mat u = mu + std_dev.cwiseProduct(noise);
    const Mat t = u.array().tanh().matrix();
    const Mat actions = (t.array().colwise() * bounds.half.array()).colwise() + bounds.mid.array();

    const double log_half = bounds.half.array().log().sum();
    const Vec gauss = (-0.5 * noise.array().square() - log_std.array() - kHalfLogTwoPi).colwise().sum().transpose();
    const Vec jac = log_one_minus_tanh_sq(u).colwise().sum().transpose();
    const Vec log_prob = gauss - jac - Vec::Constant(n, log_half);

    Tape<double> t1;
    Tape<double> t2;
    const Mat sa = stack_rows(states, actions);
    const Vec qa = q1.forward(sa, &t1).row(0).transpose();
    const Vec qb = q2.forward(sa, &t2).row(0).transpose();

    Mat up1 = Mat::Zero(1, n);
    Mat up2 = Mat::Zero(1, n);
    Vec min_q(n);
    for (Index j = 0; j < n; ++j) {
        if (qa[j] <= qb[j]) {
            min_q[j] = qa[j];
            up1(0, j) = -inv_n;
        } else {
            min_q[j] = qb[j];
            up2(0, j) = -inv_n;
        }
    }
    Mat in1;
    Mat in2;
    q1.backward(t1, up1, &in1);
    q2.backward(t2, up2, &in2);
    const Index act_dim = actions.rows();
    const Mat d_action = in1.bottomRows(act_dim) + in2.bottomRows(act_dim);

    // dL/du = dL/da * half * (1 - t^2) + (alpha / n) * 2 t
    const Mat one_minus_t2 = (1.0 - t.array().square()).matrix();
    const Mat d_u = (d_action.array() * (one_minus_t2.array().colwise() * bounds.half.array())).matrix() +
                    (2.0 * alpha * inv_n) * t;
    Mat d_log_std = d_u.cwiseProduct(std_dev).cwiseProduct(noise) - Mat::Constant(act_dim, n, alpha * inv_n);
    for (Index j = 0; j < n; ++j)
        for (Index i = 0; i < act_dim; ++i)
            if (raw_log_std(i, j) < kLogStdMin || raw_log_std(i, j) > kLogStdMax)
                d_log_std(i, j) = 0.0;

    SacPolicyObjective out;
    out.loss = (alpha * log_prob - min_q).mean();
    out.mean_grad = mean.net.backward(mean_tape, d_u);
    out.head_grad = head.log_std_net().backward(head_tape, d_log_std);
    out.actions = actions;
    out.log_prob = log_prob;
    out.min_q = min_q;
    return out;
}

SacLosses SacAgent::update(const Batch& batch, Rng& rng)
{
    const Index n = batch.size();
    if (n == 0)
        throw Error("SAC update needs a non-empty batch");
    const double inv_n = 1.0 / static_cast<double>(n);
    SacLosses losses;

    const Vec y = q_targets(batch);
    const Mat sa = stack_rows(batch.s, batch.a);
    Tape<double> t1;
    Tape<double> t2;
    const Vec r1 = q1.forward(sa, &t1).row(0).transpose() - y;
    const Vec r2 = q2.forward(sa, &t2).row(0).transpose() - y;
    losses.q1 = r1.squaredNorm() * inv_n;
    losses.q2 = r2.squaredNorm() * inv_n;
    const Gradient<double> g1 = q1.backward(t1, (2.0 * inv_n) * r1.transpose());
    const Gradient<double> g2 = q2.backward(t2, (2.0 * inv_n) * r2.transpose());

    const Mat noise = standard_normal(rng, mean.net.output_size(), n);
    const SacPolicyObjective pol = policy_objective(batch.s, noise);
    losses.policy = pol.loss;

    Tape<double> tv;
    const Vec v_target = pol.min_q - config.alpha * pol.log_prob;
    const Vec rv = value.forward(batch.s, &tv).row(0).transpose() - v_target;
    losses.value = rv.squaredNorm() * inv_n;
    const Gradient<double> gv = value.backward(tv, (2.0 * inv_n) * rv.transpose());

    if (!std::isfinite(losses.q1) || !std::isfinite(losses.q2) || !std::isfinite(losses.value) ||
        !std::isfinite(losses.policy))
        throw Error("non-finite SAC loss (q1=" + std::to_string(losses.q1) + ", q2=" + std::to_string(losses.q2) +
                    ", v=" + std::to_string(losses.value) + ", pi=" + std::to_string(losses.policy) + ")");

    q1_opt.apply(q1.parameters(), g1.flat);
    q2_opt.apply(q2.parameters(), g2.flat);
    value_opt.apply(value.parameters(), gv.flat);
    mean_opt.apply(mean.net.parameters(), pol.mean_grad.flat);
    head_opt.apply(head.log_std_net().parameters(), pol.head_grad.flat);
    soft_update();
    ++updates;
    return losses;
}

void SacAgent::soft_update()
{
    auto target = value_target.parameters();
    target = config.tau * value.flatten() + (1.0 - config.tau) * target;
}

void SacAgent::accept_transfer(const MeanFunction& new_mean, const Mlp<double>* new_value)
{
    transfer_mean(new_mean, mean);
    mean_opt.reset();
    if (new_value) {
        copy_network(*new_value, value);
        copy_network(*new_value, value_target);
        value_opt.reset();
    }
}

} // namespace chdrl
