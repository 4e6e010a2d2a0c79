#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "chdrl/env.hpp"
#include "chdrl/policy.hpp"

namespace chdrl {

/// Undiscounted return of one deterministic (mean-action) episode.
double episode_return(const MeanFunction& mean, const ActionBounds& bounds, Env& env, std::uint64_t seed);

/// Mean episode return over one episode per seed. Steps taken here are not
/// charged to any ledger.
double evaluate_agent(const MeanFunction& mean, const ActionBounds& bounds, Env& env,
                      std::span<const std::uint64_t> seeds);

/// Seeds for the n evaluation episodes at a given evaluation point; disjoint
/// from every training stream of the run.
std::vector<std::uint64_t> evaluation_seeds(std::uint64_t run_seed, std::uint64_t point, int n);

} // namespace chdrl
