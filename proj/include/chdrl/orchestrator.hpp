#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "chdrl/cem.hpp"
#include "chdrl/config.hpp"
#include "chdrl/env.hpp"
#include "chdrl/memory.hpp"
#include "chdrl/ppo.hpp"
#include "chdrl/sac.hpp"
#include "chdrl/transfer.hpp"

namespace chdrl {

enum class AgentKind { Sac, Ppo, Cem };
std::string to_string(AgentKind kind);

/// Environment steps taken during training, in total and per agent.
struct TimestepLedger {
    std::uint64_t total = 0;
    std::vector<std::uint64_t> per_agent;

    void charge(std::size_t agent)
    {
        ++total;
        ++per_agent.at(agent);
    }
    bool consistent() const;
};

/// Where a SAC agent draws its update batches from.
enum class SampleMode {
    Mixed,      // Bernoulli(p) between local and global memory
    GlobalOnly, // uniform over global memory
    Own,        // a private buffer holding only this agent's experience
};

/// Per-agent learning record used to compare runs.
struct AgentTrace {
    std::vector<double> episode_returns;
    std::vector<long> episode_lengths;
    std::vector<long> budget_chunks; // budgets of successive training phases
};

struct AgentSlot {
    std::string name;
    AgentKind kind;
    Tier tier;
    std::uint64_t stream; // seed stream tag, stable across variants
    std::variant<SacAgent, PpoAgent, CemAgent> agent;
    std::unique_ptr<Env> env;
    Rng rng;
    std::uint64_t episodes = 0;

    SampleMode sample_mode = SampleMode::Own;
    std::unique_ptr<GlobalMemory> own_memory;

    // CEM: individual under evaluation and its partial fitness
    std::optional<std::size_t> cem_slot;
    int cem_episodes_done = 0;
    double cem_return_sum = 0.0;

    std::optional<double> score;
    AgentTrace trace;

    // Per-iteration diagnostics.
    long batches = 0;
    long local_batches = 0;
    double loss[4] = {0, 0, 0, 0};

    SacAgent* sac() { return std::get_if<SacAgent>(&agent); }
    PpoAgent* ppo() { return std::get_if<PpoAgent>(&agent); }
    CemAgent* cem() { return std::get_if<CemAgent>(&agent); }
    const SacAgent* sac() const { return std::get_if<SacAgent>(&agent); }
    const PpoAgent* ppo() const { return std::get_if<PpoAgent>(&agent); }
    const CemAgent* cem() const { return std::get_if<CemAgent>(&agent); }

    /// The policy this agent would hand down or be evaluated with.
    MeanFunction transferable_mean() const;
    const Mlp<double>* value_function() const;
};

/// One evaluation point of the learning curve.
struct CurveRow {
    std::uint64_t t = 0;
    int iteration = 0;
    AgentScore scores;
    double best_score = 0.0;
    std::string transfer_events;
    std::size_t global_size = 0;
    std::size_t local_size = 0;
    double local_hit_ratio = 0.0;
};

struct AgentRow {
    std::uint64_t t = 0;
    int iteration = 0;
    std::string agent;
    std::string kind;
    std::uint64_t steps = 0;
    std::uint64_t episodes = 0;
    double score = 0.0;
    double loss[4] = {0, 0, 0, 0};
};

struct TransferRow {
    int iteration = 0;
    std::uint64_t t = 0;
    std::string edge;
    double gap = 0.0;
};

struct RunSummary {
    double max_average_return = 0.0; // max over evaluation points of the best agent score
    std::vector<std::pair<std::string, double>> agent_max_average_return;
    std::vector<std::pair<std::string, double>> final_scores;
    std::string elite_agent;     // best final score
    std::string best_ever_agent; // owner of the best score at any evaluation point
    int iterations = 0;
    std::uint64_t total_steps = 0;
};

struct RunResult {
    RunConfig config;
    std::vector<std::string> agent_names;
    std::vector<CurveRow> curve;
    std::vector<AgentRow> agent_rows;
    std::vector<TransferRow> transfers;
    TimestepLedger ledger;
    std::vector<AgentTrace> traces;
    RunSummary summary;
    std::vector<MeanFunction> final_policies;
    std::optional<MeanFunction> best_policy;
};

/// The cooperative training loop: warm-up of the global agent, then rounds
/// of per-agent training in hierarchy order with background updates of the
/// global SAC, evaluation, and gap-gated transfers, until T_m steps.
class Orchestrator {
public:
    explicit Orchestrator(RunConfig config);

    RunResult run();

    // Building blocks, exposed for tests.
    std::size_t agent_count() const { return slots_.size(); }
    AgentSlot& slot(std::size_t i) { return slots_.at(i); }
    const AgentSlot& slot(std::size_t i) const { return slots_.at(i); }
    std::optional<std::size_t> slot_of(Tier tier) const;

    /// Train one agent for exactly `budget` environment steps; returns steps used.
    long train_agent(std::size_t index, long budget);
    /// n SAC gradient steps of the global agent on its sample source.
    void background_updates(long n);
    void evaluate_all(std::uint64_t point);
    std::vector<TransferEvent> apply_transfers(const std::vector<TransferEvent>& events);
    std::vector<TransferEvent> transfer_step();

    const ReplayMemory& memory() const { return memory_; }
    ReplayMemory& memory() { return memory_; }
    const TransferFlags& flags() const { return flags_; }
    TransferFlags& flags() { return flags_; }
    const AgentScore& scores() const { return scores_; }
    const TimestepLedger& ledger() const { return ledger_; }
    const RunConfig& config() const { return config_; }
    long sac_updates_performed() const { return sac_updates_; }

private:
    void build_agents();
    void end_episode(AgentSlot& slot, EpisodeBuffer& episode, bool complete, const Vec& next_obs, bool terminal);
    void sac_updates(AgentSlot& slot, long n);
    bool background_enabled() const;
    void refresh_scores();

    RunConfig config_;
    NetworkShape shape_;
    ActionBounds bounds_;
    ReplayMemory memory_;
    TransferFlags flags_;
    AgentScore scores_;
    TimestepLedger ledger_;
    std::vector<AgentSlot> slots_;
    std::unique_ptr<Env> eval_env_;
    long sac_updates_ = 0;
};

RunResult run_cspc(const RunConfig& config);

/// Writes curve.csv, agents.csv, transfers.csv, config.txt, summary.json and
/// checkpoints/ into dir (created if missing).
void write_run_artifacts(const RunResult& result, const std::string& dir);

nlohmann::json summary_json(const RunResult& result);
std::string curve_csv(const RunResult& result);
std::string agents_csv(const RunResult& result);
std::string transfers_csv(const RunResult& result);

} // namespace chdrl
