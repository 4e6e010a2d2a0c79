#include "chdrl/evaluation.hpp"

namespace chdrl {

namespace {
constexpr std::uint64_t kEvalStream = 0xe7a1;
}

double episode_return(const MeanFunction& mean, const ActionBounds& bounds, Env& env, std::uint64_t seed)
{
    Vec obs = env.reset(seed);
    double total = 0.0;
    for (;;) {
        const StepResult res = env.step(act_deterministic(mean, obs, bounds));
        total += res.reward;
        if (res.done)
            return total;
        obs = res.next_obs;
    }
}

double evaluate_agent(const MeanFunction& mean, const ActionBounds& bounds, Env& env,
                      std::span<const std::uint64_t> seeds)
{
    if (seeds.empty())
        throw Error("evaluation needs at least one episode");
    double sum = 0.0;
    for (std::uint64_t s : seeds)
        sum += episode_return(mean, bounds, env, s);
    return sum / static_cast<double>(seeds.size());
}

std::vector<std::uint64_t> evaluation_seeds(std::uint64_t run_seed, std::uint64_t point, int n)
{
    std::vector<std::uint64_t> seeds;
    for (int k = 0; k < n; ++k)
        seeds.push_back(derive_seed(run_seed, kEvalStream, point * 1000 + static_cast<std::uint64_t>(k)));
    return seeds;
}

} // namespace chdrl
