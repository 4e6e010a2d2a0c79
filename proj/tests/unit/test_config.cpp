#include <doctest.h>

#include <string>

#include "chdrl/config.hpp"

using namespace chdrl;

namespace {

std::string error_of(const std::string& text, const std::vector<std::string>& overrides = {})
{
    try {
        parse_config(text, overrides);
    } catch (const Error& e) {
        return e.what();
    }
    return "";
}

bool mentions(const std::string& msg, const std::string& what) { return msg.find(what) != std::string::npos; }

} // namespace

TEST_CASE("empty config gives the documented defaults")
{
    const RunConfig c = parse_config("");
    CHECK(c.env == "point-dense");
    CHECK(c.variant == "cspc");
    CHECK(c.T_g == 2000);
    CHECK(c.T == 1000);
    CHECK(c.T_m == 30000);
    CHECK(c.f == 5.0);
    CHECK(c.p == 0.3);
    CHECK(c.M_g == 0);
    CHECK(c.M_l == 2000);
    CHECK(c.eval_episodes == 5);
    CHECK(c.hidden == std::vector<Index>{64, 64});
    CHECK(c.sac.gamma == 0.99);
    CHECK(c.sac.tau == 0.005);
    CHECK(c.sac.alpha == 0.2);
    CHECK(c.sac.batch_size == 128);
    CHECK(c.sac.start_steps == 500);
    CHECK(c.sac.lr == 3e-4);
    CHECK(c.ppo.clip == 0.2);
    CHECK(c.ppo.lambda == 0.97);
    CHECK(c.ppo.epochs == 10);
    CHECK(c.ppo.minibatch == 64);
    CHECK(c.ppo.initial_log_std == -0.5);
    CHECK(c.cem.population == 10);
    CHECK(c.cem.elites == 5);
    CHECK(c.cem.noise == 1e-3);
    CHECK(c.cem.noise_decay == 0.999);
    CHECK(c.flags == VariantFlags{});
    CHECK_FALSE(c.reset_flags_per_iteration);
}

TEST_CASE("keys, sections, comments and overrides")
{
    const RunConfig c = parse_config(R"(
# desk-scale run
env = deceptive-corridor
seed = 7
p = 0.3
T_m = 5e4

[sac]
lr = 1e-3   # faster critic
[cem]
population = 12
)",
                                     {"T=500", "sac.batch_size=64", "hidden=32,16"});
    CHECK(c.env == "deceptive-corridor");
    CHECK(c.seed == 7);
    CHECK(c.p == 0.3);
    CHECK(c.T_m == 50000);
    CHECK(c.T == 500);
    CHECK(c.sac.lr == 1e-3);
    CHECK(c.sac.batch_size == 64);
    CHECK(c.cem.population == 12);
    CHECK(c.hidden == std::vector<Index>{32, 16});
}

TEST_CASE("range errors name the key and its valid range")
{
    const std::string msg = error_of("p = 1.5");
    CHECK(mentions(msg, "'p'"));
    CHECK(mentions(msg, "[0,1]"));
    CHECK(mentions(error_of("T_g = 50\nT_m = 10"), "T_g"));
    CHECK(mentions(error_of("[cem]\nelites = 11"), "cem.elites"));
    CHECK(mentions(error_of("[ppo]\nclip = 1.0"), "ppo.clip"));
    CHECK(mentions(error_of("", {"eval_episodes=0"}), "eval_episodes"));
}

TEST_CASE("type errors and unknown names are hard errors")
{
    CHECK(mentions(error_of("T = lots"), "'T'"));
    CHECK(mentions(error_of("seed = -1"), "seed"));
    CHECK(mentions(error_of("reset_flags_per_iteration = maybe"), "reset_flags_per_iteration"));
    CHECK(mentions(error_of("learning_rate = 1"), "learning_rate"));
    CHECK(mentions(error_of("[sac]\nwarmup = 1"), "sac.warmup"));
    CHECK(mentions(error_of("env = mujoco"), "env"));
    CHECK(mentions(error_of("variant = cspc-xyz"), "variant"));
    CHECK(mentions(error_of("", {"novalue"}), "novalue"));
    CHECK(mentions(error_of("just words"), "line 1"));
}

TEST_CASE("variants set flags and flag keys refine them")
{
    CHECK(parse_config("variant = cspc-ce").flags.disable_ce);
    CHECK(parse_config("variant = cspc-lm").flags.disable_lm);
    CHECK(parse_config("variant = cspc-gm").flags.disable_gm);
    CHECK(parse_config("variant = cspc-sac").flags.drop_sac);
    CHECK(parse_config("variant = c3sac").flags.homogeneous_c3sac);
    CHECK(parse_config("variant = 3sac").flags.homogeneous_3sac);
    const VariantFlags solo = parse_config("variant = ppo").flags;
    CHECK(solo.drop_sac);
    CHECK(solo.drop_cem);
    CHECK(solo.disable_ce);
    // The variant applies first wherever it appears.
    const RunConfig c = parse_config("disable_lm = true\nvariant = cspc-ce");
    CHECK(c.flags.disable_ce);
    CHECK(c.flags.disable_lm);
    for (const std::string& v : variant_names())
        CHECK(is_variant(v));
}

TEST_CASE("inconsistent flags are rejected")
{
    CHECK_FALSE(error_of("homogeneous_3sac = true\nhomogeneous_c3sac = true").empty());
    CHECK_FALSE(error_of("variant = c3sac\ndrop_ppo = true").empty());
    CHECK_FALSE(error_of("drop_sac = true\ndrop_ppo = true\ndrop_cem = true").empty());
}

TEST_CASE("canonical text round-trips")
{
    const RunConfig c = parse_config("variant = cspc-gm\nseed = 3\nf = 2.5\n[ppo]\nlr = 0.0001234\n", {"horizon=40"});
    const RunConfig back = parse_config(to_text(c));
    CHECK(to_text(back) == to_text(c));
    CHECK(back.flags == c.flags);
    CHECK(back.ppo.lr == c.ppo.lr);
    CHECK(back.horizon == 40);
}

TEST_CASE("missing config file is an error")
{
    CHECK_THROWS_AS(load_config("/nonexistent/chdrl.cfg"), Error);
}
