#include <doctest.h>

#include "chdrl/env.hpp"
#include "chdrl/evaluation.hpp"
#include "chdrl/transfer.hpp"

using namespace chdrl;

namespace {

AgentScore scores(double s, double p, double c) { return {s, p, c}; }

std::vector<TransferEdge> edges(const std::vector<TransferEvent>& events)
{
    std::vector<TransferEdge> out;
    for (const auto& e : events)
        out.push_back(e.edge);
    return out;
}

class ConstantEnv : public Env {
public:
    ConstantEnv()
    {
        spec_.obs_dim = 1;
        spec_.act_dim = 1;
        spec_.act_low = Vec::Constant(1, -1.0);
        spec_.act_high = Vec::Constant(1, 1.0);
        spec_.horizon = 10;
        spec_.reward_bound = 1.0;
    }
    const EnvSpec& spec() const override { return spec_; }
    std::string id() const override { return "constant"; }
    Vec reset(std::uint64_t) override
    {
        steps_ = 0;
        return Vec::Zero(1);
    }
    StepResult step(const Vec&) override
    {
        ++steps_;
        return {Vec::Zero(1), 1.0, steps_ >= spec_.horizon, steps_ >= spec_.horizon};
    }
    std::unique_ptr<Env> clone() const override { return std::make_unique<ConstantEnv>(*this); }

private:
    EnvSpec spec_;
};

} // namespace

TEST_CASE("gap rule examples")
{
    CHECK(edges(decide_transfers(scores(500, 350, 600), 100)) == std::vector{TransferEdge::GlobalToUpper});
    CHECK(decide_transfers(scores(450, 350, 600), 100).empty());
    CHECK(edges(decide_transfers(scores(200, 400, 250), 100)) == std::vector{TransferEdge::UpperToLower});
    const auto all = decide_transfers(scores(500, 300, 100), 100);
    CHECK(edges(all) ==
          std::vector{TransferEdge::GlobalToUpper, TransferEdge::GlobalToLower, TransferEdge::UpperToLower});
    CHECK(all[0].gap == 200.0);
    CHECK(all[1].gap == 400.0);
    CHECK(all[2].gap == 200.0);
}

TEST_CASE("absent tiers never fire")
{
    AgentScore s;
    s.global = 100.0;
    s.local_lower = 0.0;
    CHECK(edges(decide_transfers(s, 5)) == std::vector{TransferEdge::GlobalToLower});
    CHECK(decide_transfers(AgentScore{}, 5).empty());
    CHECK(AgentScore{}.minimum() == kNoScore);
    CHECK(s.minimum() == 0.0);
}

TEST_CASE("shifting every score leaves decisions unchanged")
{
    Rng rng(4);
    for (int k = 0; k < 500; ++k) {
        const AgentScore s = scores(draw_uniform(rng, -50.0, 50.0), draw_uniform(rng, -50.0, 50.0),
                                    draw_uniform(rng, -50.0, 50.0));
        const double shift = draw_uniform(rng, -1e3, 1e3);
        const auto a = decide_transfers(s, 5.0);
        const auto b = decide_transfers(scores(*s.global + shift, *s.local_upper + shift, *s.local_lower + shift), 5.0);
        CHECK(edges(a) == edges(b));
        for (const auto& e : a) {
            const double src = *s.of(source_tier(e.edge)), dst = *s.of(target_tier(e.edge));
            CHECK(src - dst > 5.0);
        }
    }
}

TEST_CASE("flags follow global edges and stay set")
{
    TransferFlags f;
    mark_flags(f, {{TransferEdge::UpperToLower, 9.0}});
    CHECK_FALSE(f.accepted_upper);
    CHECK_FALSE(f.accepted_lower);
    mark_flags(f, {{TransferEdge::GlobalToLower, 9.0}});
    CHECK(f.accepted_lower);
    mark_flags(f, {});
    CHECK(f.accepted_lower);
    mark_flags(f, {{TransferEdge::GlobalToUpper, 9.0}});
    CHECK(f.accepted_upper);
}

TEST_CASE("edge endpoints")
{
    CHECK(source_tier(TransferEdge::GlobalToUpper) == Tier::Global);
    CHECK(target_tier(TransferEdge::GlobalToUpper) == Tier::LocalUpper);
    CHECK(source_tier(TransferEdge::UpperToLower) == Tier::LocalUpper);
    CHECK(target_tier(TransferEdge::GlobalToLower) == Tier::LocalLower);
    CHECK(edge_name(TransferEdge::UpperToLower) == "upper>lower");
}

TEST_CASE("evaluation averages episode returns")
{
    ConstantEnv env;
    MeanFunction mean{Mlp<double>({1, 3, 1})};
    const auto seeds = evaluation_seeds(0, 0, 5);
    CHECK(evaluate_agent(mean, ActionBounds::from(env.spec()), env, seeds) == 10.0);
    CHECK_THROWS_AS(evaluate_agent(mean, ActionBounds::from(env.spec()), env, {}), Error);
}

TEST_CASE("evaluation matches an independent rollout loop")
{
    Rng rng(12);
    auto env = make_env("point-dense");
    NetworkShape shape;
    shape.obs_dim = 4;
    shape.act_dim = 2;
    const auto mean = MeanFunction::initialized(shape, rng);
    const auto bounds = ActionBounds::from(env->spec());
    const auto seeds = evaluation_seeds(3, 2, 5);
    double total = 0.0;
    for (std::uint64_t s : seeds) {
        PointMassEnv e(PointMassEnv::Reward::Dense);
        Vec o = e.reset(s);
        for (int t = 0; t < e.spec().horizon; ++t) {
            const Vec u = mean.net.forward(o);
            Vec a(2);
            a << std::tanh(u[0]), std::tanh(u[1]);
            const StepResult r = e.step(a);
            total += r.reward;
            o = r.next_obs;
            if (r.done)
                break;
        }
    }
    CHECK(evaluate_agent(mean, bounds, *env, seeds) == doctest::Approx(total / 5.0).epsilon(1e-12));
}

TEST_CASE("evaluation seeds are reproducible and distinct across points")
{
    const auto a = evaluation_seeds(1, 3, 5);
    CHECK(a == evaluation_seeds(1, 3, 5));
    const auto b = evaluation_seeds(1, 4, 5);
    for (auto s : a)
        CHECK(std::find(b.begin(), b.end(), s) == b.end());
}
