#include "chdrl/cem.hpp"

#include <algorithm>
#include <numeric>

namespace chdrl {

std::vector<std::size_t> select_elites(std::span<const double> fitness, std::size_t k)
{
    if (k > fitness.size())
        throw Error("elite count exceeds population size");
    std::vector<std::size_t> order(fitness.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fitness[a] > fitness[b]; });
    order.resize(k);
    return order;
}

CemSearch::CemSearch(Vec initial_mean, const CemConfig& cfg)
    : config_(cfg), mean_(std::move(initial_mean)), noise_(cfg.noise)
{
    if (config_.population == 0 || config_.elites == 0 || config_.elites > config_.population)
        throw Error("cem: need 1 <= elites <= population");
    if (!(config_.initial_variance > 0.0))
        throw Error("cem.initial_variance must be positive");
    if (config_.noise < 0.0)
        throw Error("cem.noise must be non-negative");
    variance_ = Vec::Constant(mean_.size(), config_.initial_variance);
    population_.assign(config_.population, mean_);
    fitness_.assign(config_.population, std::nullopt);
}

void CemSearch::set_distribution(Vec mean, Vec variance)
{
    if (mean.size() != mean_.size() || variance.size() != mean_.size())
        throw Error("cem: distribution size mismatch");
    if ((variance.array() <= 0.0).any())
        throw Error("cem: variances must be positive");
    mean_ = std::move(mean);
    variance_ = std::move(variance);
}

void CemSearch::sample_population(Rng& rng)
{
    const Vec std_dev = variance_.cwiseSqrt();
    for (Vec& ind : population_) {
        ind.resize(mean_.size());
        for (Index i = 0; i < mean_.size(); ++i)
            ind[i] = mean_[i] + std_dev[i] * draw_normal(rng);
    }
    std::fill(fitness_.begin(), fitness_.end(), std::nullopt);
}

void CemSearch::set_individual(std::size_t slot, const Vec& params)
{
    if (slot >= population_.size())
        throw Error("cem: individual slot out of range");
    if (params.size() != mean_.size())
        throw Error("cem: transferred parameter length mismatch");
    population_[slot] = params;
    fitness_[slot].reset();
}

std::optional<std::size_t> CemSearch::next_unevaluated() const
{
    for (std::size_t i = 0; i < fitness_.size(); ++i)
        if (!fitness_[i])
            return i;
    return std::nullopt;
}

void CemSearch::record_fitness(std::size_t slot, double value)
{
    if (slot >= fitness_.size())
        throw Error("cem: individual slot out of range");
    fitness_[slot] = value;
}

bool CemSearch::generation_complete() const
{
    return std::all_of(fitness_.begin(), fitness_.end(), [](const auto& f) { return f.has_value(); });
}

void CemSearch::distribution_update()
{
    if (!generation_complete())
        throw Error("cem: distribution update before the population was evaluated");
    std::vector<double> fit(fitness_.size());
    std::transform(fitness_.begin(), fitness_.end(), fit.begin(), [](const auto& f) { return *f; });
    const std::vector<std::size_t> elites = select_elites(fit, config_.elites);

    champion_ = population_[elites.front()];
    champion_fitness_ = fit[elites.front()];
    last_best_ = fit[elites.front()];
    last_mean_ = std::accumulate(fit.begin(), fit.end(), 0.0) / static_cast<double>(fit.size());

    const double k = static_cast<double>(elites.size());
    Vec new_mean = Vec::Zero(mean_.size());
    for (std::size_t e : elites)
        new_mean += population_[e];
    new_mean /= k;
    Vec new_var = Vec::Zero(mean_.size());
    for (std::size_t e : elites)
        new_var += (population_[e] - new_mean).cwiseAbs2();
    new_var /= k;
    new_var.array() += noise_;

    mean_ = std::move(new_mean);
    variance_ = std::move(new_var);
    noise_ *= config_.noise_decay;
    ++generation_;
}

const Vec& CemSearch::best_individual() const
{
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < fitness_.size(); ++i)
        if (fitness_[i] && (!best || *fitness_[i] > *fitness_[*best]))
            best = i;
    if (best && (!champion_fitness_ || *fitness_[*best] >= *champion_fitness_))
        return population_[*best];
    if (champion_fitness_)
        return champion_;
    return mean_;
}

std::optional<double> CemSearch::best_fitness() const
{
    std::optional<double> best = champion_fitness_;
    for (const auto& f : fitness_)
        if (f && (!best || *f >= *best))
            best = f;
    return best;
}

CemAgent::CemAgent(const NetworkShape& shape, ActionBounds action_bounds, const CemConfig& cfg, Rng& init_rng)
    : bounds(std::move(action_bounds)), search(Vec(), cfg), scratch(MeanFunction::initialized(shape, init_rng))
{
    search = CemSearch(scratch.net.flatten(), cfg);
    search.sample_population(init_rng);
}

MeanFunction CemAgent::policy_of(const Vec& params) const
{
    MeanFunction m = scratch;
    m.net.load(params);
    return m;
}

std::vector<double> cem_evaluate(CemAgent& agent, Env& env, std::span<const std::uint64_t> seeds)
{
    const std::size_t pop = agent.search.population().size();
    const auto per = static_cast<std::size_t>(agent.search.config().episodes_per_individual);
    if (seeds.size() < pop * per)
        throw Error("cem_evaluate: not enough episode seeds");
    std::vector<double> fitness(pop);
    for (std::size_t i = 0; i < pop; ++i) {
        const MeanFunction policy = agent.policy_of(agent.search.population()[i]);
        fitness[i] = evaluate_agent(policy, agent.bounds, env, seeds.subspan(i * per, per));
        agent.search.record_fitness(i, fitness[i]);
    }
    return fitness;
}

} // namespace chdrl
