#include "chdrl/orchestrator.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "chdrl/checkpoint.hpp"
#include "chdrl/evaluation.hpp"

namespace chdrl {

namespace {

// Seed stream tags. A given agent keeps its tag in every variant so that its
// randomness does not depend on which other agents are present.
constexpr std::uint64_t kStreamSac = 1;
constexpr std::uint64_t kStreamPpo = 2;
constexpr std::uint64_t kStreamCem = 3;
constexpr std::uint64_t kStreamSac2 = 4;
constexpr std::uint64_t kStreamSac3 = 5;

constexpr std::uint64_t kInitIndex = 3;
constexpr std::uint64_t kActionIndex = 2;

std::uint64_t episode_seed(std::uint64_t run_seed, std::uint64_t stream, std::uint64_t episode)
{
    return derive_seed(run_seed, stream * 1000 + 1, episode);
}

std::string fmt(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

std::string fmt(const std::optional<double>& v) { return v ? fmt(*v) : std::string(); }

} // namespace

std::string to_string(AgentKind kind)
{
    switch (kind) {
    case AgentKind::Sac:
        return "sac";
    case AgentKind::Ppo:
        return "ppo";
    case AgentKind::Cem:
        return "cem";
    }
    return "?";
}

bool TimestepLedger::consistent() const
{
    std::uint64_t sum = 0;
    for (auto n : per_agent)
        sum += n;
    return sum == total;
}

MeanFunction AgentSlot::transferable_mean() const
{
    if (const auto* s = sac())
        return s->mean;
    if (const auto* p = ppo())
        return p->mean;
    return cem()->best_policy();
}

const Mlp<double>* AgentSlot::value_function() const
{
    if (const auto* s = sac())
        return &s->value;
    if (const auto* p = ppo())
        return &p->value;
    return nullptr;
}

Orchestrator::Orchestrator(RunConfig config)
    : config_(std::move(config)), memory_(config_.M_g, config_.M_l), eval_env_(nullptr)
{
    config_.validate();
    eval_env_ = make_env(config_.env, config_.horizon);
    shape_.obs_dim = eval_env_->spec().obs_dim;
    shape_.act_dim = eval_env_->spec().act_dim;
    shape_.hidden = config_.hidden;
    bounds_ = ActionBounds::from(eval_env_->spec());
    build_agents();
}

void Orchestrator::build_agents()
{
    struct Plan {
        std::string name;
        AgentKind kind;
        std::uint64_t stream;
    };
    const VariantFlags& v = config_.flags;
    std::vector<Plan> plan;
    const bool homogeneous = v.homogeneous_3sac || v.homogeneous_c3sac;
    if (homogeneous) {
        plan = {{"sac1", AgentKind::Sac, kStreamSac}, {"sac2", AgentKind::Sac, kStreamSac2},
                {"sac3", AgentKind::Sac, kStreamSac3}};
    } else {
        if (!v.drop_sac)
            plan.push_back({"sac", AgentKind::Sac, kStreamSac});
        if (!v.drop_ppo)
            plan.push_back({"ppo", AgentKind::Ppo, kStreamPpo});
        if (!v.drop_cem)
            plan.push_back({"cem", AgentKind::Cem, kStreamCem});
    }

    for (std::size_t i = 0; i < plan.size(); ++i) {
        Tier tier = Tier::Global;
        if (i > 0) {
            if (homogeneous)
                tier = i == 1 ? Tier::LocalUpper : Tier::LocalLower;
            else
                tier = plan[i].kind == AgentKind::Ppo ? Tier::LocalUpper : Tier::LocalLower;
        }
        Rng init_rng(derive_seed(config_.seed, plan[i].stream, kInitIndex));
        auto make_agent = [&]() -> std::variant<SacAgent, PpoAgent, CemAgent> {
            switch (plan[i].kind) {
            case AgentKind::Sac:
                return SacAgent(shape_, bounds_, config_.sac, init_rng);
            case AgentKind::Ppo:
                return PpoAgent(shape_, bounds_, config_.ppo, init_rng);
            case AgentKind::Cem:
                break;
            }
            return CemAgent(shape_, bounds_, config_.cem, init_rng);
        };
        AgentSlot s{plan[i].name,
                    plan[i].kind,
                    tier,
                    plan[i].stream,
                    make_agent(),
                    make_env(config_.env, config_.horizon),
                    Rng(derive_seed(config_.seed, plan[i].stream, kActionIndex)),
                    0,
                    SampleMode::Own,
                    nullptr,
                    std::nullopt,
                    0,
                    0.0,
                    std::nullopt,
                    AgentTrace{}};
        if (s.kind == AgentKind::Sac) {
            if (v.homogeneous_3sac)
                s.sample_mode = SampleMode::GlobalOnly;
            else if (tier != Tier::Global || v.disable_gm)
                s.sample_mode = SampleMode::Own;
            else if (v.disable_lm)
                s.sample_mode = SampleMode::GlobalOnly;
            else
                s.sample_mode = SampleMode::Mixed;
            if (s.sample_mode == SampleMode::Own)
                s.own_memory = std::make_unique<GlobalMemory>(config_.M_g);
        }
        slots_.push_back(std::move(s));
        ledger_.per_agent.push_back(0);
    }
}

std::optional<std::size_t> Orchestrator::slot_of(Tier tier) const
{
    for (std::size_t i = 0; i < slots_.size(); ++i)
        if (slots_[i].tier == tier)
            return i;
    return std::nullopt;
}

bool Orchestrator::background_enabled() const
{
    const auto g = slot_of(Tier::Global);
    return g && slots_[*g].kind == AgentKind::Sac && !config_.flags.disable_gm && slots_.size() > 1;
}

void Orchestrator::sac_updates(AgentSlot& slot, long n)
{
    SacAgent& sac = *slot.sac();
    const std::size_t batch = sac.config.batch_size;
    const TransitionRing& backing = slot.sample_mode == SampleMode::Own ? *slot.own_memory : memory_.global;
    if (backing.size() < batch)
        return;
    for (long k = 0; k < n; ++k) {
        Batch b = slot.sample_mode == SampleMode::Mixed
                      ? sample_mixed(memory_.global, memory_.local, batch, config_.p, slot.rng)
                      : sample_uniform(backing, batch, slot.rng);
        const SacLosses l = sac.update(b, slot.rng);
        ++slot.batches;
        if (b.source == Batch::Source::Local)
            ++slot.local_batches;
        ++sac_updates_;
        slot.loss[0] = l.q1;
        slot.loss[1] = l.q2;
        slot.loss[2] = l.value;
        slot.loss[3] = l.policy;
    }
}

void Orchestrator::background_updates(long n)
{
    const auto g = slot_of(Tier::Global);
    if (!g || slots_[*g].kind != AgentKind::Sac)
        throw Error("background updates need a global SAC agent");
    sac_updates(slots_[*g], n);
}

void Orchestrator::end_episode(AgentSlot& slot, EpisodeBuffer& episode, bool complete, const Vec& next_obs,
                               bool terminal)
{
    const double ret = episode.episode_return();
    slot.trace.episode_returns.push_back(ret);
    slot.trace.episode_lengths.push_back(static_cast<long>(episode.size()));

    if (slot.kind == AgentKind::Sac) {
        sac_updates(slot, static_cast<long>(episode.size()));
    } else if (auto* ppo = slot.ppo()) {
        if (!ppo->rollout.empty()) {
            const double bootstrap = terminal ? 0.0 : ppo->value_of(next_obs);
            const PpoLosses l = ppo->update(bootstrap, slot.rng);
            slot.loss[0] = l.policy;
            slot.loss[1] = l.value;
            slot.loss[2] = l.clip_fraction;
            slot.loss[3] = ppo->head.log_std_vector().mean();
        }
    } else if (auto* cem = slot.cem()) {
        // A cut-off episode says nothing reliable about fitness; the
        // individual is re-run in the next training phase.
        if (complete && slot.cem_slot) {
            slot.cem_return_sum += ret;
            if (++slot.cem_episodes_done >= cem->search.config().episodes_per_individual) {
                cem->search.record_fitness(*slot.cem_slot,
                                           slot.cem_return_sum / static_cast<double>(slot.cem_episodes_done));
                slot.cem_slot.reset();
                slot.cem_episodes_done = 0;
                slot.cem_return_sum = 0.0;
                if (cem->search.generation_complete()) {
                    cem->search.distribution_update();
                    cem->search.sample_population(slot.rng);
                    slot.loss[0] = cem->search.last_best_fitness();
                    slot.loss[1] = cem->search.last_mean_fitness();
                    slot.loss[2] = static_cast<double>(cem->search.generation());
                    slot.loss[3] = cem->search.noise();
                }
            }
        }
    }

    if (slot.own_memory)
        for (const Transition& t : episode.steps())
            slot.own_memory->push(t);
    const bool local_enabled = complete && !config_.flags.disable_lm && !config_.flags.homogeneous_3sac;
    admit_episode(memory_, episode, slot.tier, flags_, scores_.minimum(), local_enabled);
}

long Orchestrator::train_agent(std::size_t index, long budget)
{
    if (budget < 1)
        throw Error("training budget must be at least 1");
    AgentSlot& slot = slots_.at(index);
    slot.trace.budget_chunks.push_back(budget);
    Env& env = *slot.env;
    EpisodeBuffer episode;
    long used = 0;
    while (used < budget) {
        Vec obs = env.reset(episode_seed(config_.seed, slot.stream, slot.episodes++));
        std::optional<MeanFunction> individual;
        if (auto* cem = slot.cem()) {
            if (!slot.cem_slot)
                slot.cem_slot = cem->search.next_unevaluated();
            individual = cem->policy_of(cem->search.population()[*slot.cem_slot]);
        }
        bool finished = false;
        while (used < budget) {
            Vec action;
            ActionSample sample;
            if (auto* sac = slot.sac()) {
                action = sac->act(obs, slot.rng);
            } else if (auto* ppo = slot.ppo()) {
                sample = ppo->act(obs, slot.rng);
                action = sample.action;
            } else {
                action = act_deterministic(*individual, obs, bounds_);
            }
            StepResult res = env.step(action);
            ++used;
            ledger_.charge(index);
            if (auto* ppo = slot.ppo())
                ppo->record(obs, sample, res.reward, res.terminal());
            episode.push({obs, action, res.reward, res.next_obs, res.terminal()});
            obs = std::move(res.next_obs);
            if (res.done) {
                end_episode(slot, episode, true, obs, res.terminal());
                finished = true;
                break;
            }
        }
        if (!finished)
            end_episode(slot, episode, false, obs, false);
    }
    return used;
}

void Orchestrator::evaluate_all(std::uint64_t point)
{
    const auto seeds = evaluation_seeds(config_.seed, point, config_.eval_episodes);
    for (AgentSlot& s : slots_)
        s.score = evaluate_agent(s.transferable_mean(), bounds_, *eval_env_, seeds);
    refresh_scores();
}

void Orchestrator::refresh_scores()
{
    scores_ = AgentScore{};
    for (const AgentSlot& s : slots_) {
        if (s.tier == Tier::Global)
            scores_.global = s.score;
        else if (s.tier == Tier::LocalUpper)
            scores_.local_upper = s.score;
        else
            scores_.local_lower = s.score;
    }
}

std::vector<TransferEvent> Orchestrator::apply_transfers(const std::vector<TransferEvent>& events)
{
    for (const TransferEvent& e : events) {
        const auto src_i = slot_of(source_tier(e.edge));
        const auto dst_i = slot_of(target_tier(e.edge));
        if (!src_i || !dst_i)
            throw Error("transfer edge " + edge_name(e.edge) + " has no agent at one end");
        const AgentSlot& src = slots_[*src_i];
        AgentSlot& dst = slots_[*dst_i];
        const MeanFunction mean = src.transferable_mean();
        const Mlp<double>* value = e.edge == TransferEdge::GlobalToUpper ? src.value_function() : nullptr;
        if (auto* sac = dst.sac()) {
            sac->accept_transfer(mean, value);
        } else if (auto* ppo = dst.ppo()) {
            ppo->accept_transfer(mean, value);
        } else if (auto* cem = dst.cem()) {
            if (!mean.net.same_architecture(cem->scratch.net))
                throw Error("network architecture mismatch on transfer");
            const std::size_t pop = cem->search.population().size();
            const std::size_t target = source_tier(e.edge) == Tier::Global ? 0 : std::min<std::size_t>(1, pop - 1);
            cem->search.set_individual(target, mean.net.flatten());
            if (dst.cem_slot == target) {
                dst.cem_slot.reset();
                dst.cem_episodes_done = 0;
                dst.cem_return_sum = 0.0;
            }
        }
    }
    mark_flags(flags_, events);
    return events;
}

std::vector<TransferEvent> Orchestrator::transfer_step()
{
    if (config_.flags.disable_ce || config_.flags.homogeneous_3sac)
        return {};
    if (config_.reset_flags_per_iteration)
        flags_ = TransferFlags{};
    return apply_transfers(decide_transfers(scores_, config_.f));
}

RunResult Orchestrator::run()
{
    RunResult result;
    result.config = config_;
    for (const AgentSlot& s : slots_)
        result.agent_names.push_back(s.name);
    const auto global = slot_of(Tier::Global);
    const auto T_m = static_cast<std::uint64_t>(config_.T_m);

    auto remaining = [&] { return static_cast<long>(T_m - std::min(T_m, ledger_.total)); };
    auto name_of = [&](Tier tier) { return slots_[*slot_of(tier)].name; };
    double best_so_far = kNoScore;

    auto record = [&](int iteration, const std::vector<TransferEvent>& events) {
        CurveRow row;
        row.t = ledger_.total;
        row.iteration = iteration;
        row.scores = scores_;
        std::size_t best_slot = 0;
        row.best_score = kNoScore;
        for (std::size_t i = 0; i < slots_.size(); ++i)
            if (slots_[i].score && *slots_[i].score > row.best_score) {
                row.best_score = *slots_[i].score;
                best_slot = i;
            }
        for (const TransferEvent& e : events) {
            const std::string edge = name_of(source_tier(e.edge)) + ">" + name_of(target_tier(e.edge));
            row.transfer_events += (row.transfer_events.empty() ? "" : ";") + edge;
            result.transfers.push_back({iteration, ledger_.total, edge, e.gap});
        }
        row.global_size = memory_.global.size();
        row.local_size = memory_.local.size();
        if (global && slots_[*global].batches > 0)
            row.local_hit_ratio =
                static_cast<double>(slots_[*global].local_batches) / static_cast<double>(slots_[*global].batches);
        result.curve.push_back(row);

        for (std::size_t i = 0; i < slots_.size(); ++i) {
            const AgentSlot& s = slots_[i];
            AgentRow ar;
            ar.t = ledger_.total;
            ar.iteration = iteration;
            ar.agent = s.name;
            ar.kind = to_string(s.kind);
            ar.steps = ledger_.per_agent[i];
            ar.episodes = s.episodes;
            ar.score = s.score.value_or(kNoScore);
            std::copy(std::begin(s.loss), std::end(s.loss), std::begin(ar.loss));
            result.agent_rows.push_back(ar);
        }
        if (row.best_score > best_so_far) {
            best_so_far = row.best_score;
            result.best_policy = slots_[best_slot].transferable_mean();
            result.summary.best_ever_agent = slots_[best_slot].name;
        }
    };

    if (config_.T_g > 0 && global)
        train_agent(*global, std::min(static_cast<long>(config_.T_g), remaining()));

    int iteration = 0;
    while (remaining() > 0) {
        ++iteration;
        for (AgentSlot& s : slots_)
            s.batches = s.local_batches = 0;
        for (std::size_t i = 0; i < slots_.size(); ++i) {
            const long budget = std::min(config_.T, remaining());
            if (budget <= 0)
                break;
            const long used = train_agent(i, budget);
            if (slots_[i].tier != Tier::Global && background_enabled())
                background_updates(used);
        }
        evaluate_all(static_cast<std::uint64_t>(iteration));
        record(iteration, transfer_step());
    }
    if (result.curve.empty()) {
        evaluate_all(0);
        record(0, {});
    }

    result.ledger = ledger_;
    RunSummary& sum = result.summary;
    sum.iterations = iteration;
    sum.total_steps = ledger_.total;
    sum.max_average_return = kNoScore;
    for (const CurveRow& r : result.curve)
        sum.max_average_return = std::max(sum.max_average_return, r.best_score);
    double elite = kNoScore;
    for (const AgentSlot& s : slots_) {
        double best = kNoScore;
        for (const AgentRow& r : result.agent_rows)
            if (r.agent == s.name)
                best = std::max(best, r.score);
        sum.agent_max_average_return.emplace_back(s.name, best);
        sum.final_scores.emplace_back(s.name, s.score.value_or(kNoScore));
        if (s.score && *s.score > elite) {
            elite = *s.score;
            sum.elite_agent = s.name;
        }
        result.traces.push_back(s.trace);
        result.final_policies.push_back(s.transferable_mean());
    }
    return result;
}

RunResult run_cspc(const RunConfig& config) { return Orchestrator(config).run(); }

std::string curve_csv(const RunResult& result)
{
    std::ostringstream out;
    out << "t,iteration,S_s,S_p,S_c,best_score,transfer_events,M_g_size,M_l_size,local_hit_ratio\n";
    for (const CurveRow& r : result.curve) {
        out << r.t << ',' << r.iteration << ',' << fmt(r.scores.global) << ',' << fmt(r.scores.local_upper) << ','
            << fmt(r.scores.local_lower) << ',' << fmt(r.best_score) << ',' << r.transfer_events << ','
            << r.global_size << ',' << r.local_size << ',' << fmt(r.local_hit_ratio) << '\n';
    }
    return out.str();
}

std::string agents_csv(const RunResult& result)
{
    std::ostringstream out;
    out << "t,iteration,agent,kind,steps,episodes,score,stat0,stat1,stat2,stat3\n";
    for (const AgentRow& r : result.agent_rows) {
        out << r.t << ',' << r.iteration << ',' << r.agent << ',' << r.kind << ',' << r.steps << ',' << r.episodes
            << ',' << fmt(r.score);
        for (double l : r.loss)
            out << ',' << fmt(l);
        out << '\n';
    }
    return out.str();
}

std::string transfers_csv(const RunResult& result)
{
    std::ostringstream out;
    out << "iteration,t,edge,gap\n";
    for (const TransferRow& r : result.transfers)
        out << r.iteration << ',' << r.t << ',' << r.edge << ',' << fmt(r.gap) << '\n';
    return out.str();
}

namespace {

void write_file(const std::filesystem::path& path, const std::string& content)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw Error("cannot write '" + path.string() + "'");
    out << content;
}

double finite_or_null(double v) { return v; }

} // namespace

nlohmann::json summary_json(const RunResult& result)
{
    nlohmann::json j;
    const RunSummary& s = result.summary;
    j["env"] = result.config.env;
    j["variant"] = result.config.variant;
    j["seed"] = result.config.seed;
    j["max_average_return"] = finite_or_null(s.max_average_return);
    j["elite_agent"] = s.elite_agent;
    j["best_ever_agent"] = s.best_ever_agent;
    j["iterations"] = s.iterations;
    j["total_steps"] = s.total_steps;
    for (const auto& [name, v] : s.agent_max_average_return)
        j["agent_max_average_return"][name] = v;
    for (const auto& [name, v] : s.final_scores)
        j["final_scores"][name] = v;
    for (std::size_t i = 0; i < result.agent_names.size(); ++i)
        j["agent_steps"][result.agent_names[i]] = result.ledger.per_agent[i];
    return j;
}

void write_run_artifacts(const RunResult& result, const std::string& dir)
{
    namespace fs = std::filesystem;
    const fs::path root(dir);
    fs::create_directories(root / "checkpoints");
    write_file(root / "curve.csv", curve_csv(result));
    write_file(root / "agents.csv", agents_csv(result));
    write_file(root / "transfers.csv", transfers_csv(result));
    write_file(root / "config.txt", to_text(result.config));
    write_file(root / "summary.json", summary_json(result).dump(2) + "\n");
    for (std::size_t i = 0; i < result.agent_names.size(); ++i)
        save_network(result.final_policies[i].net, (root / "checkpoints" / (result.agent_names[i] + ".json")).string());
    if (result.best_policy)
        save_network(result.best_policy->net, (root / "checkpoints" / "best.json").string());
}

} // namespace chdrl
