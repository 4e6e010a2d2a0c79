#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "chdrl/numerics.hpp"

namespace chdrl {

struct EnvSpec {
    Index obs_dim = 0;
    Index act_dim = 0;
    Vec act_low;
    Vec act_high;
    int horizon = 1;
    // Largest |reward| a single step can produce.
    double reward_bound = 0.0;
};

struct StepResult {
    Vec next_obs;
    double reward = 0.0;
    // True when the episode is over, for either reason below.
    bool done = false;
    // True when the episode ended only because the horizon was reached.
    bool truncated = false;

    bool terminal() const { return done && !truncated; }
};

/// Single-owner continuous-control environment.
class Env {
public:
    virtual ~Env() = default;

    virtual const EnvSpec& spec() const = 0;
    virtual std::string id() const = 0;
    virtual Vec reset(std::uint64_t seed) = 0;
    /// Clamps the action into bounds; throws on NaN.
    virtual StepResult step(const Vec& action) = 0;
    virtual std::unique_ptr<Env> clone() const = 0;

    int steps_taken() const { return steps_; }

protected:
    Vec checked_action(const Vec& action) const;

    int steps_ = 0;
};

/// Planar point mass with a fixed goal at (1, 1).
/// v <- clamp(v + 0.05 a, +-1), p <- clamp(p + 0.05 v, +-2).
class PointMassEnv : public Env {
public:
    enum class Reward { Dense, Sparse };

    explicit PointMassEnv(Reward reward, int horizon = 200);

    const EnvSpec& spec() const override { return spec_; }
    std::string id() const override;
    Vec reset(std::uint64_t seed) override;
    StepResult step(const Vec& action) override;
    std::unique_ptr<Env> clone() const override { return std::make_unique<PointMassEnv>(*this); }

    static constexpr double kGoalX = 1.0;
    static constexpr double kGoalY = 1.0;
    static constexpr double kGoalRadius = 0.1;
    static constexpr double kGoalBonus = 10.0;

private:
    Vec observation() const;

    Reward reward_;
    EnvSpec spec_;
    Eigen::Vector2d pos_ = Eigen::Vector2d::Zero();
    Eigen::Vector2d vel_ = Eigen::Vector2d::Zero();
};

/// One-dimensional corridor: pushing forward costs 0.01 per unit of force
/// until the gate at x = 2, which pays +50 and ends the episode. Velocity is
/// damped, so undirected action noise stays near the start.
class DeceptiveCorridorEnv : public Env {
public:
    explicit DeceptiveCorridorEnv(int horizon = 300);

    const EnvSpec& spec() const override { return spec_; }
    std::string id() const override { return "deceptive-corridor"; }
    Vec reset(std::uint64_t seed) override;
    StepResult step(const Vec& action) override;
    std::unique_ptr<Env> clone() const override { return std::make_unique<DeceptiveCorridorEnv>(*this); }

    static constexpr double kGate = 2.0;
    static constexpr double kGateReward = 50.0;
    static constexpr double kPushCost = 0.01;
    static constexpr double kDamping = 0.9;

private:
    EnvSpec spec_;
    double x_ = 0.0;
    double v_ = 0.0;
};

const std::vector<std::string>& env_ids();
bool is_env_id(const std::string& id);
/// horizon 0 keeps the environment's own horizon.
std::unique_ptr<Env> make_env(const std::string& id, int horizon = 0);

} // namespace chdrl
