#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "chdrl/cem.hpp"
#include "chdrl/numerics.hpp"
#include "chdrl/ppo.hpp"
#include "chdrl/sac.hpp"

namespace chdrl {

struct VariantFlags {
    bool disable_ce = false;
    bool disable_lm = false;
    bool disable_gm = false;
    bool drop_ppo = false;
    bool drop_cem = false;
    bool drop_sac = false;
    bool homogeneous_3sac = false;
    bool homogeneous_c3sac = false;

    bool operator==(const VariantFlags&) const = default;
};

/// Named configurations: cspc, the ablations cspc-ce / cspc-lm / cspc-gm,
/// the agent removals cspc-ppo / cspc-cem / cspc-sac, the homogeneous
/// c3sac / 3sac, and the standalone baselines sac / ppo / cem.
const std::vector<std::string>& variant_names();
bool is_variant(const std::string& name);
VariantFlags variant_flags(const std::string& name);

/// Fully resolved settings of one run.
struct RunConfig {
    std::string env = "point-dense";
    std::uint64_t seed = 0;
    std::string variant = "cspc";
    VariantFlags flags;

    long T_g = 2000;  // warm-up steps of the global agent
    long T = 1000;    // per-agent steps in one iteration
    long T_m = 30000; // total step budget
    double f = 5.0;   // score gap that must be exceeded for a transfer
    double p = 0.3;   // probability of drawing a batch from local memory
    std::size_t M_g = 0; // 0 = uncapped
    std::size_t M_l = 2000;
    int eval_episodes = 5;
    int horizon = 0; // 0 = the environment's own horizon
    bool reset_flags_per_iteration = false;
    std::vector<Index> hidden{64, 64};

    SacConfig sac;
    PpoConfig ppo;
    CemConfig cem;

    /// Throws Error naming the offending key.
    void validate() const;
};

/// Parses the flat key = value format with optional [sac] / [ppo] / [cem]
/// sections and '#' comments. Overrides ("key=value", section keys written
/// as "sac.lr=1e-3") are applied after the text. Unknown keys are errors.
RunConfig parse_config(const std::string& text, const std::vector<std::string>& overrides = {});
RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides = {});

/// Canonical text form; parse_config(to_text(c)) reproduces c.
std::string to_text(const RunConfig& config);

} // namespace chdrl
