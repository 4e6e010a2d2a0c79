#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "chdrl/config.hpp"
#include "chdrl/orchestrator.hpp"

namespace chdrl {

/// One run of a sweep.
struct SweepCell {
    RunConfig config;
    std::string label; // "<variant>/<env>/seed-<seed>"
};

/// Plan file (JSON):
///   "base":      {key: value, ...}   settings shared by every cell (optional)
///   "grid":      {"variant": [...], "env": [...], "seed": [...]}
///   "cells":     [{"variant": ..., "env": ..., "seed": ..., key: value, ...}]
/// Either grid or cells, not both. Values use the run-config key names.
struct ExperimentPlan {
    std::vector<SweepCell> cells;
};

ExperimentPlan parse_plan(const nlohmann::json& j);
ExperimentPlan load_plan(const std::string& path);

struct CellOutcome {
    std::string label;
    std::string variant;
    std::string env;
    std::uint64_t seed = 0;
    std::optional<RunSummary> summary; // absent when the cell failed
    std::string error;
};

struct GroupStats {
    std::string variant;
    std::string env;
    int runs = 0;
    int failures = 0;
    double mean = 0.0; // over successful runs of max_average_return
    double stddev = 0.0; // population standard deviation
    std::vector<std::string> elite_agents; // one per successful cell
};

struct SweepResult {
    std::vector<CellOutcome> cells;
    std::vector<GroupStats> groups;
};

/// Population mean and standard deviation.
std::pair<double, double> mean_std(const std::vector<double>& xs);

/// Runs every cell (jobs worker threads), writing each cell's artifacts to
/// out_dir/<label> when out_dir is non-empty, and summary.json at the top.
/// A failing cell is recorded and the sweep continues.
SweepResult run_sweep(const ExperimentPlan& plan, const std::string& out_dir, int jobs = 1);

std::vector<GroupStats> aggregate(const std::vector<CellOutcome>& cells);
nlohmann::json sweep_summary_json(const SweepResult& result);

} // namespace chdrl
