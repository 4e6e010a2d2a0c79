// chdrl: run one cell, a sweep, or evaluate a saved policy.
//
//   chdrl run   [--config FILE] [--set key=value]... [--variant V] [--env E] [--seed N] [--out DIR]
//   chdrl sweep --plan FILE [--jobs N] [--out DIR]
//   chdrl eval  --checkpoint FILE --env E [--seed N] [--episodes N]
//
// CHDRL_OUTPUT_ROOT replaces the default output root "runs".

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>

#include <CLI11.hpp>

#include "chdrl/checkpoint.hpp"
#include "chdrl/config.hpp"
#include "chdrl/evaluation.hpp"
#include "chdrl/orchestrator.hpp"
#include "chdrl/sweep.hpp"

namespace fs = std::filesystem;
using namespace chdrl;

namespace {

std::string output_root()
{
    const char* env = std::getenv("CHDRL_OUTPUT_ROOT");
    return env && *env ? env : "runs";
}

int cmd_run(const std::string& config_path, std::vector<std::string> overrides, const std::string& variant,
            const std::string& env, const std::string& seed, std::string out)
{
    if (!variant.empty())
        overrides.push_back("variant=" + variant);
    if (!env.empty())
        overrides.push_back("env=" + env);
    if (!seed.empty())
        overrides.push_back("seed=" + seed);
    const RunConfig cfg = config_path.empty() ? parse_config("", overrides) : load_config(config_path, overrides);
    if (out.empty())
        out = (fs::path(output_root()) / cfg.variant / cfg.env / ("seed-" + std::to_string(cfg.seed))).string();
    const RunResult r = run_cspc(cfg);
    write_run_artifacts(r, out);
    std::printf("%s %s seed=%llu steps=%llu iterations=%d max_average_return=%.4f elite=%s\n", cfg.variant.c_str(),
                cfg.env.c_str(), static_cast<unsigned long long>(cfg.seed),
                static_cast<unsigned long long>(r.summary.total_steps), r.summary.iterations,
                r.summary.max_average_return, r.summary.elite_agent.c_str());
    std::printf("wrote %s\n", out.c_str());
    return 0;
}

int cmd_sweep(const std::string& plan_path, int jobs, std::string out)
{
    const ExperimentPlan plan = load_plan(plan_path);
    if (out.empty())
        out = (fs::path(output_root()) / fs::path(plan_path).stem()).string();
    const SweepResult r = run_sweep(plan, out, jobs);
    int failures = 0;
    for (const GroupStats& g : r.groups) {
        std::printf("%-10s %-20s runs=%d failures=%d max_average_return=%.4f +- %.4f\n", g.variant.c_str(),
                    g.env.c_str(), g.runs, g.failures, g.mean, g.stddev);
        failures += g.failures;
    }
    for (const CellOutcome& c : r.cells)
        if (!c.summary)
            std::fprintf(stderr, "cell %s failed: %s\n", c.label.c_str(), c.error.c_str());
    std::printf("wrote %s\n", (fs::path(out) / "summary.json").string().c_str());
    return failures == 0 ? 0 : 1;
}

int cmd_eval(const std::string& checkpoint, const std::string& env_id, std::uint64_t seed, int episodes)
{
    auto env = make_env(env_id);
    MeanFunction mean{load_network(checkpoint)};
    if (mean.net.input_size() != env->spec().obs_dim || mean.net.output_size() != env->spec().act_dim)
        throw Error("checkpoint shape does not match environment '" + env_id + "'");
    const auto seeds = evaluation_seeds(seed, 0, episodes);
    const double score = evaluate_agent(mean, ActionBounds::from(env->spec()), *env, seeds);
    std::printf("%s episodes=%d score=%.6f\n", env_id.c_str(), episodes, score);
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Cooperative heterogeneous deep reinforcement learning"};
    app.require_subcommand(1);

    auto* run = app.add_subcommand("run", "train one (variant, env, seed) cell");
    std::string config_path, variant, env, seed, run_out;
    std::vector<std::string> overrides;
    run->add_option("--config", config_path, "key = value config file")->check(CLI::ExistingFile);
    run->add_option("--set", overrides, "override, e.g. T_m=5000 or sac.lr=1e-3");
    run->add_option("--variant", variant, "variant name");
    run->add_option("--env", env, "environment id");
    run->add_option("--seed", seed, "run seed");
    run->add_option("--out", run_out, "run directory");

    auto* sweep = app.add_subcommand("sweep", "run every cell of a plan file");
    std::string plan_path, sweep_out;
    int jobs = 1;
    sweep->add_option("--plan", plan_path, "plan JSON")->required()->check(CLI::ExistingFile);
    sweep->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
    sweep->add_option("--out", sweep_out, "sweep directory");

    auto* eval = app.add_subcommand("eval", "score a saved policy");
    std::string checkpoint, eval_env;
    std::uint64_t eval_seed = 0;
    int episodes = 5;
    eval->add_option("--checkpoint", checkpoint, "network JSON")->required()->check(CLI::ExistingFile);
    eval->add_option("--env", eval_env, "environment id")->required();
    eval->add_option("--seed", eval_seed, "evaluation seed");
    eval->add_option("--episodes", episodes, "episodes")->check(CLI::PositiveNumber);

    CLI11_PARSE(app, argc, argv);
    try {
        if (*run)
            return cmd_run(config_path, overrides, variant, env, seed, run_out);
        if (*sweep)
            return cmd_sweep(plan_path, jobs, sweep_out);
        return cmd_eval(checkpoint, eval_env, eval_seed, episodes);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "chdrl: error: %s\n", e.what());
        return 1;
    }
}
