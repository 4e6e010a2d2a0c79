#pragma once

#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "chdrl/env.hpp"
#include "chdrl/evaluation.hpp"
#include "chdrl/numerics.hpp"
#include "chdrl/policy.hpp"

namespace chdrl {

struct CemConfig {
    std::size_t population = 10;
    std::size_t elites = 5;
    double initial_variance = 1e-2;
    double noise = 1e-3;
    double noise_decay = 0.999;
    int episodes_per_individual = 1;
};

/// Indices of the k largest fitness values, best first; ties go to the lower index.
std::vector<std::size_t> select_elites(std::span<const double> fitness, std::size_t k);

/// Cross-entropy method over a flat parameter vector with a diagonal
/// Gaussian search distribution.
class CemSearch {
public:
    CemSearch(Vec initial_mean, const CemConfig& cfg);

    const CemConfig& config() const { return config_; }
    const Vec& mean() const { return mean_; }
    const Vec& variance() const { return variance_; }
    double noise() const { return noise_; }
    long generation() const { return generation_; }

    const std::vector<Vec>& population() const { return population_; }
    const std::vector<std::optional<double>>& fitness() const { return fitness_; }

    /// Draws a fresh population; all fitness entries become unknown.
    void sample_population(Rng& rng);

    /// Replaces one individual (a transferred policy) and forgets its fitness.
    void set_individual(std::size_t slot, const Vec& params);

    std::optional<std::size_t> next_unevaluated() const;
    void record_fitness(std::size_t slot, double value);
    bool generation_complete() const;

    /// Refit mean and variance to the elites, add extra noise, decay it.
    void distribution_update();

    /// Fittest of the evaluated current individuals and the best individual
    /// of the last completed generation (current wins ties); the
    /// distribution mean before any fitness is known.
    const Vec& best_individual() const;
    std::optional<double> best_fitness() const;

    // Statistics of the last completed generation.
    double last_best_fitness() const { return last_best_; }
    double last_mean_fitness() const { return last_mean_; }

    void set_distribution(Vec mean, Vec variance);

private:
    CemConfig config_;
    Vec mean_;
    Vec variance_;
    double noise_;
    long generation_ = 0;
    std::vector<Vec> population_;
    std::vector<std::optional<double>> fitness_;
    Vec champion_;
    std::optional<double> champion_fitness_;
    double last_best_ = kNaN;
    double last_mean_ = kNaN;

    static constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
};

/// The evolutionary local agent: a CEM search over MeanFunction parameters
/// whose individuals act deterministically.
struct CemAgent {
    ActionBounds bounds;
    CemSearch search;
    MeanFunction scratch; // layout template for turning individuals into policies

    CemAgent(const NetworkShape& shape, ActionBounds action_bounds, const CemConfig& cfg, Rng& init_rng);

    MeanFunction policy_of(const Vec& params) const;
    MeanFunction best_policy() const { return policy_of(search.best_individual()); }
};

/// Evaluates every individual of the current population on
/// episodes_per_individual episodes (seeds[i * episodes + e]) and records the
/// mean return as its fitness. Returns the fitness vector.
std::vector<double> cem_evaluate(CemAgent& agent, Env& env, std::span<const std::uint64_t> seeds);

} // namespace chdrl
