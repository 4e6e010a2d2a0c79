#include "chdrl/sweep.hpp"

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <thread>

namespace chdrl {

namespace {

std::string scalar_text(const nlohmann::json& v)
{
    if (v.is_string())
        return v.get<std::string>();
    if (v.is_boolean())
        return v.get<bool>() ? "true" : "false";
    if (v.is_array()) {
        std::string out;
        for (const auto& e : v)
            out += (out.empty() ? "" : ",") + scalar_text(e);
        return out;
    }
    return v.dump();
}

void append_overrides(const nlohmann::json& obj, std::vector<std::string>& out)
{
    if (!obj.is_object())
        throw Error("plan: expected an object of settings");
    for (const auto& [key, value] : obj.items())
        out.push_back(key + "=" + scalar_text(value));
}

SweepCell make_cell(std::vector<std::string> overrides)
{
    SweepCell cell;
    cell.config = parse_config("", overrides);
    cell.label = cell.config.variant + "/" + cell.config.env + "/seed-" + std::to_string(cell.config.seed);
    return cell;
}

} // namespace

ExperimentPlan parse_plan(const nlohmann::json& j)
{
    if (!j.is_object())
        throw Error("plan: top level must be an object");
    for (const auto& [key, value] : j.items())
        if (key != "base" && key != "grid" && key != "cells")
            throw Error("plan: unknown key '" + key + "'");
    std::vector<std::string> base;
    if (j.contains("base"))
        append_overrides(j.at("base"), base);

    ExperimentPlan plan;
    const bool has_grid = j.contains("grid");
    const bool has_cells = j.contains("cells");
    if (has_grid == has_cells)
        throw Error("plan: give exactly one of 'grid' or 'cells'");

    if (has_grid) {
        const auto& g = j.at("grid");
        auto axis = [&](const char* name, nlohmann::json fallback) {
            nlohmann::json a = g.contains(name) ? g.at(name) : fallback;
            if (!a.is_array() || a.empty())
                throw Error(std::string("plan: grid axis '") + name + "' must be a non-empty list");
            return a;
        };
        for (const auto& [key, value] : g.items())
            if (key != "variant" && key != "env" && key != "seed")
                throw Error("plan: unknown grid axis '" + key + "'");
        const auto variants = axis("variant", {"cspc"});
        const auto envs = axis("env", {"point-dense"});
        const auto seeds = axis("seed", {0});
        for (const auto& v : variants)
            for (const auto& e : envs)
                for (const auto& s : seeds) {
                    auto o = base;
                    o.push_back("variant=" + scalar_text(v));
                    o.push_back("env=" + scalar_text(e));
                    o.push_back("seed=" + scalar_text(s));
                    plan.cells.push_back(make_cell(std::move(o)));
                }
    } else {
        const auto& cells = j.at("cells");
        if (!cells.is_array() || cells.empty())
            throw Error("plan: 'cells' must be a non-empty list");
        for (const auto& c : cells) {
            auto o = base;
            append_overrides(c, o);
            plan.cells.push_back(make_cell(std::move(o)));
        }
    }
    for (std::size_t i = 0; i < plan.cells.size(); ++i)
        for (std::size_t k = 0; k < i; ++k)
            if (plan.cells[i].label == plan.cells[k].label)
                throw Error("plan: duplicate cell '" + plan.cells[i].label + "'");
    return plan;
}

ExperimentPlan load_plan(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw Error("cannot read plan '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw Error("plan '" + path + "' is not valid JSON: " + e.what());
    }
    return parse_plan(j);
}

std::pair<double, double> mean_std(const std::vector<double>& xs)
{
    if (xs.empty())
        return {0.0, 0.0};
    double mean = 0.0;
    for (double x : xs)
        mean += x;
    mean /= static_cast<double>(xs.size());
    double var = 0.0;
    for (double x : xs)
        var += (x - mean) * (x - mean);
    return {mean, std::sqrt(var / static_cast<double>(xs.size()))};
}

std::vector<GroupStats> aggregate(const std::vector<CellOutcome>& cells)
{
    std::vector<GroupStats> groups;
    std::map<std::pair<std::string, std::string>, std::size_t> index;
    std::vector<std::vector<double>> values;
    for (const CellOutcome& c : cells) {
        const auto key = std::make_pair(c.variant, c.env);
        auto it = index.find(key);
        if (it == index.end()) {
            it = index.emplace(key, groups.size()).first;
            GroupStats g;
            g.variant = c.variant;
            g.env = c.env;
            groups.push_back(std::move(g));
            values.emplace_back();
        }
        GroupStats& g = groups[it->second];
        ++g.runs;
        if (!c.summary) {
            ++g.failures;
            continue;
        }
        values[it->second].push_back(c.summary->max_average_return);
        g.elite_agents.push_back(c.summary->elite_agent);
    }
    for (std::size_t i = 0; i < groups.size(); ++i)
        std::tie(groups[i].mean, groups[i].stddev) = mean_std(values[i]);
    return groups;
}

nlohmann::json sweep_summary_json(const SweepResult& result)
{
    nlohmann::json j;
    j["groups"] = nlohmann::json::array();
    for (const GroupStats& g : result.groups)
        j["groups"].push_back({{"variant", g.variant},
                               {"env", g.env},
                               {"runs", g.runs},
                               {"failures", g.failures},
                               {"mean", g.mean},
                               {"std", g.stddev},
                               {"elite_agents", g.elite_agents}});
    j["cells"] = nlohmann::json::array();
    for (const CellOutcome& c : result.cells) {
        nlohmann::json cj{{"label", c.label}, {"variant", c.variant}, {"env", c.env}, {"seed", c.seed}};
        if (c.summary) {
            cj["max_average_return"] = c.summary->max_average_return;
            cj["elite_agent"] = c.summary->elite_agent;
        } else {
            cj["error"] = c.error;
        }
        j["cells"].push_back(cj);
    }
    return j;
}

SweepResult run_sweep(const ExperimentPlan& plan, const std::string& out_dir, int jobs)
{
    namespace fs = std::filesystem;
    SweepResult result;
    result.cells.resize(plan.cells.size());
    std::atomic<std::size_t> next{0};
    std::mutex fs_mutex;

    auto worker = [&] {
        for (std::size_t i = next++; i < plan.cells.size(); i = next++) {
            const SweepCell& cell = plan.cells[i];
            CellOutcome& out = result.cells[i];
            out.label = cell.label;
            out.variant = cell.config.variant;
            out.env = cell.config.env;
            out.seed = cell.config.seed;
            try {
                RunResult r = run_cspc(cell.config);
                if (!out_dir.empty()) {
                    std::lock_guard lock(fs_mutex);
                    write_run_artifacts(r, (fs::path(out_dir) / cell.label).string());
                }
                out.summary = r.summary;
            } catch (const std::exception& e) {
                out.error = e.what();
            }
        }
    };
    const int n = std::max(1, std::min<int>(jobs, static_cast<int>(plan.cells.size())));
    std::vector<std::thread> pool;
    for (int k = 1; k < n; ++k)
        pool.emplace_back(worker);
    worker();
    for (auto& t : pool)
        t.join();

    result.groups = aggregate(result.cells);
    if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        std::ofstream(fs::path(out_dir) / "summary.json") << sweep_summary_json(result).dump(2) << '\n';
    }
    return result;
}

} // namespace chdrl
