#include "chdrl/env.hpp"

#include <algorithm>
#include <cmath>

namespace chdrl {

Vec Env::checked_action(const Vec& action) const
{
    const EnvSpec& s = spec();
    if (action.size() != s.act_dim)
        throw Error("action dimension mismatch: expected " + std::to_string(s.act_dim) + ", got " +
                    std::to_string(action.size()));
    if (action.hasNaN())
        throw Error("NaN action passed to " + id());
    return action.cwiseMax(s.act_low).cwiseMin(s.act_high);
}

PointMassEnv::PointMassEnv(Reward reward, int horizon) : reward_(reward)
{
    if (horizon < 1)
        throw Error("env horizon must be at least 1");
    spec_.obs_dim = 4;
    spec_.act_dim = 2;
    spec_.act_low = Vec::Constant(2, -1.0);
    spec_.act_high = Vec::Constant(2, 1.0);
    spec_.horizon = horizon;
    // Farthest corner of the [-2, 2]^2 box from the goal is sqrt(18) away.
    spec_.reward_bound = reward == Reward::Dense ? std::sqrt(18.0) : kGoalBonus;
}

std::string PointMassEnv::id() const { return reward_ == Reward::Dense ? "point-dense" : "point-sparse"; }

Vec PointMassEnv::observation() const
{
    Vec obs(4);
    obs << pos_.x(), pos_.y(), vel_.x(), vel_.y();
    return obs;
}

Vec PointMassEnv::reset(std::uint64_t seed)
{
    Rng rng(seed);
    pos_.x() = draw_uniform(rng, -0.5, 0.5);
    pos_.y() = draw_uniform(rng, -0.5, 0.5);
    vel_.setZero();
    steps_ = 0;
    return observation();
}

StepResult PointMassEnv::step(const Vec& action)
{
    const Vec a = checked_action(action);
    vel_ = (vel_ + 0.05 * a).cwiseMax(-1.0).cwiseMin(1.0);
    pos_ = (pos_ + 0.05 * vel_).cwiseMax(-2.0).cwiseMin(2.0);
    ++steps_;

    const double dist = (pos_ - Eigen::Vector2d(kGoalX, kGoalY)).norm();
    StepResult out;
    bool terminal = false;
    if (reward_ == Reward::Dense) {
        out.reward = -dist;
    } else if (dist < kGoalRadius) {
        out.reward = kGoalBonus;
        terminal = true;
    }
    out.next_obs = observation();
    out.truncated = !terminal && steps_ >= spec_.horizon;
    out.done = terminal || out.truncated;
    return out;
}

DeceptiveCorridorEnv::DeceptiveCorridorEnv(int horizon)
{
    if (horizon < 1)
        throw Error("env horizon must be at least 1");
    spec_.obs_dim = 2;
    spec_.act_dim = 1;
    spec_.act_low = Vec::Constant(1, -1.0);
    spec_.act_high = Vec::Constant(1, 1.0);
    spec_.horizon = horizon;
    spec_.reward_bound = kGateReward;
}

Vec DeceptiveCorridorEnv::reset(std::uint64_t /*seed*/)
{
    x_ = 0.0;
    v_ = 0.0;
    steps_ = 0;
    return Eigen::Vector2d(x_, v_);
}

StepResult DeceptiveCorridorEnv::step(const Vec& action)
{
    const double a = checked_action(action)[0];
    v_ = std::clamp(kDamping * v_ + 0.05 * a, -1.0, 1.0);
    x_ = std::clamp(x_ + 0.05 * v_, 0.0, 3.0);
    ++steps_;

    StepResult out;
    const bool terminal = x_ >= kGate;
    out.reward = terminal ? kGateReward : -kPushCost * std::max(a, 0.0);
    out.next_obs = Eigen::Vector2d(x_, v_);
    out.truncated = !terminal && steps_ >= spec_.horizon;
    out.done = terminal || out.truncated;
    return out;
}

const std::vector<std::string>& env_ids()
{
    static const std::vector<std::string> ids{"point-dense", "point-sparse", "deceptive-corridor"};
    return ids;
}

bool is_env_id(const std::string& id) { return std::ranges::find(env_ids(), id) != env_ids().end(); }

std::unique_ptr<Env> make_env(const std::string& id, int horizon)
{
    if (id == "point-dense")
        return std::make_unique<PointMassEnv>(PointMassEnv::Reward::Dense, horizon > 0 ? horizon : 200);
    if (id == "point-sparse")
        return std::make_unique<PointMassEnv>(PointMassEnv::Reward::Sparse, horizon > 0 ? horizon : 200);
    if (id == "deceptive-corridor")
        return std::make_unique<DeceptiveCorridorEnv>(horizon > 0 ? horizon : 300);
    throw Error("unknown env id '" + id + "' (expected point-dense | point-sparse | deceptive-corridor)");
}

} // namespace chdrl
