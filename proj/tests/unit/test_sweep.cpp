#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "chdrl/sweep.hpp"

using namespace chdrl;
using nlohmann::json;

namespace {

json base() { return {{"hidden", "8,8"}, {"T_g", 100}, {"T", 50}, {"T_m", 300}, {"sac.batch_size", 16}}; }

} // namespace

TEST_CASE("population mean and standard deviation")
{
    const auto [m, s] = mean_std({2, 4, 4, 4, 5, 5, 7, 9});
    CHECK(m == 5.0);
    CHECK(s == 2.0);
    CHECK(mean_std({3.5}) == std::pair{3.5, 0.0});
}

TEST_CASE("grid plans expand to the cross product")
{
    const ExperimentPlan p =
        parse_plan({{"base", base()}, {"grid", {{"variant", {"cspc", "sac"}}, {"env", {"point-dense"}}, {"seed", {0, 1, 2}}}}});
    REQUIRE(p.cells.size() == 6);
    CHECK(p.cells[0].label == "cspc/point-dense/seed-0");
    CHECK(p.cells[5].label == "sac/point-dense/seed-2");
    CHECK(p.cells[5].config.flags.drop_ppo);
    CHECK(p.cells[0].config.T_m == 300);
}

TEST_CASE("plan errors")
{
    CHECK_THROWS_AS(parse_plan(json::array()), Error);
    CHECK_THROWS_AS(parse_plan({{"base", base()}}), Error);
    CHECK_THROWS_AS(parse_plan({{"grid", {{"variant", {"nope"}}}}}), Error);
    CHECK_THROWS_AS(parse_plan({{"grid", {{"colour", {"red"}}}}}), Error);
    CHECK_THROWS_AS(parse_plan({{"cells", json::array()}}), Error);
    CHECK_THROWS_AS(parse_plan({{"cells", {{{"p", 3}}}}}), Error);
    CHECK_THROWS_AS(parse_plan({{"grid", {{"seed", {0, 0}}}}}), Error);
    CHECK_THROWS_AS(load_plan("/nonexistent/plan.json"), Error);
}

TEST_CASE("one cell gives zero spread and writes its artifacts")
{
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "chdrl_sweep_one";
    fs::remove_all(dir);
    const ExperimentPlan p = parse_plan({{"base", base()}, {"cells", {{{"variant", "cspc"}, {"seed", 3}}}}});
    const SweepResult r = run_sweep(p, dir.string());
    REQUIRE(r.groups.size() == 1);
    CHECK(r.groups[0].runs == 1);
    CHECK(r.groups[0].stddev == 0.0);
    CHECK(r.groups[0].mean == r.cells[0].summary->max_average_return);
    CHECK(fs::exists(dir / "cspc/point-dense/seed-3/curve.csv"));
    std::ifstream in(dir / "summary.json");
    const json j = json::parse(in);
    CHECK(j.at("cells").size() == 1);
    CHECK(j.at("groups")[0].at("std") == 0.0);
    CHECK(j.at("cells")[0].at("elite_agent") == r.cells[0].summary->elite_agent);
    fs::remove_all(dir);
}

TEST_CASE("group statistics match a hand calculation over seeds")
{
    const ExperimentPlan p = parse_plan({{"base", base()}, {"grid", {{"variant", {"cem"}}, {"seed", {0, 1, 2, 3, 4}}}}});
    const SweepResult r = run_sweep(p, "", 2);
    std::vector<double> xs;
    for (const CellOutcome& c : r.cells)
        xs.push_back(c.summary->max_average_return);
    double m = 0.0;
    for (double x : xs)
        m += x / 5.0;
    double v = 0.0;
    for (double x : xs)
        v += (x - m) * (x - m) / 5.0;
    REQUIRE(r.groups.size() == 1);
    CHECK(r.groups[0].mean == doctest::Approx(m).epsilon(1e-12));
    CHECK(r.groups[0].stddev == doctest::Approx(std::sqrt(v)).epsilon(1e-12));
    CHECK(r.groups[0].elite_agents.size() == 5);
}

TEST_CASE("parallel and sequential sweeps agree")
{
    const ExperimentPlan p = parse_plan({{"base", base()}, {"grid", {{"variant", {"cspc", "ppo"}}, {"seed", {0, 1}}}}});
    const SweepResult a = run_sweep(p, "", 1), b = run_sweep(p, "", 3);
    for (std::size_t i = 0; i < a.cells.size(); ++i)
        CHECK(a.cells[i].summary->max_average_return == b.cells[i].summary->max_average_return);
}

TEST_CASE("an ablation plan yields one curve per variant")
{
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "chdrl_sweep_ablation";
    fs::remove_all(dir);
    const ExperimentPlan p =
        parse_plan({{"base", base()}, {"grid", {{"variant", {"cspc", "cspc-ce", "cspc-lm", "cspc-gm"}}}}});
    run_sweep(p, dir.string());
    int curves = 0;
    for (const auto& e : fs::recursive_directory_iterator(dir))
        curves += e.path().filename() == "curve.csv";
    CHECK(curves == 4);
    fs::remove_all(dir);
}

TEST_CASE("aggregation records failed cells and keeps going")
{
    std::vector<CellOutcome> cells(3);
    for (auto& c : cells) {
        c.variant = "cspc";
        c.env = "point-dense";
    }
    cells[0].summary = RunSummary{};
    cells[0].summary->max_average_return = -10.0;
    cells[0].summary->elite_agent = "sac";
    cells[1].error = "boom";
    cells[2].summary = RunSummary{};
    cells[2].summary->max_average_return = -20.0;
    cells[2].summary->elite_agent = "cem";
    const auto g = aggregate(cells);
    REQUIRE(g.size() == 1);
    CHECK(g[0].runs == 3);
    CHECK(g[0].failures == 1);
    CHECK(g[0].mean == -15.0);
    CHECK(g[0].stddev == 5.0);
    CHECK(g[0].elite_agents == std::vector<std::string>{"sac", "cem"});
}

TEST_CASE("a failing cell is recorded and the sweep continues")
{
    ExperimentPlan p = parse_plan({{"base", base()}, {"cells", {{{"variant", "cem"}}, {{"variant", "ppo"}}}}});
    p.cells[0].config.T = 0; // rejected when the run starts
    const SweepResult r = run_sweep(p, "");
    CHECK_FALSE(r.cells[0].summary.has_value());
    CHECK(r.cells[0].error.find("T") != std::string::npos);
    REQUIRE(r.cells[1].summary.has_value());
    CHECK(sweep_summary_json(r).at("cells")[0].contains("error"));
}
