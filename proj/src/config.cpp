#include "chdrl/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include "chdrl/env.hpp"

namespace chdrl {

namespace {

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos)
        return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::string unquote(const std::string& s)
{
    if (s.size() >= 2 && ((s.front() == '"' && s.back() == '"') || (s.front() == '\'' && s.back() == '\'')))
        return s.substr(1, s.size() - 2);
    return s;
}

double as_double(const std::string& key, const std::string& v)
{
    try {
        std::size_t pos = 0;
        const double d = std::stod(v, &pos);
        if (pos == v.size())
            return d;
    } catch (const std::exception&) {
    }
    throw Error("config key '" + key + "': expected a number, got '" + v + "'");
}

long as_long(const std::string& key, const std::string& v)
{
    long out = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec == std::errc() && ptr == v.data() + v.size())
        return out;
    // Accept integral values written in exponent form, e.g. 5e4.
    const double d = as_double(key, v);
    if (d == static_cast<double>(static_cast<long>(d)))
        return static_cast<long>(d);
    throw Error("config key '" + key + "': expected an integer, got '" + v + "'");
}

std::size_t as_count(const std::string& key, const std::string& v)
{
    const long n = as_long(key, v);
    if (n < 0)
        throw Error("config key '" + key + "': must be non-negative, got " + v);
    return static_cast<std::size_t>(n);
}

bool as_bool(const std::string& key, const std::string& v)
{
    if (v == "true" || v == "1" || v == "yes" || v == "on")
        return true;
    if (v == "false" || v == "0" || v == "no" || v == "off")
        return false;
    throw Error("config key '" + key + "': expected a boolean, got '" + v + "'");
}

std::vector<Index> as_sizes(const std::string& key, const std::string& v)
{
    std::vector<Index> out;
    std::string item;
    std::stringstream ss(v);
    while (std::getline(ss, item, ','))
        out.push_back(static_cast<Index>(as_count(key, trim(item))));
    return out;
}

std::string fmt_double(double d)
{
    std::ostringstream os;
    os.precision(17);
    os << d;
    return os.str();
}

std::string fmt_bool(bool b) { return b ? "true" : "false"; }

struct KeyDef {
    std::string name;
    std::function<void(RunConfig&, const std::string&, const std::string&)> set;
    std::function<std::string(const RunConfig&)> get;
};

#define CHDRL_DOUBLE(name, member)                                                                                     \
    KeyDef{name, [](RunConfig& c, const std::string& k, const std::string& v) { c.member = as_double(k, v); },         \
           [](const RunConfig& c) { return fmt_double(c.member); }}
#define CHDRL_LONG(name, member)                                                                                       \
    KeyDef{name, [](RunConfig& c, const std::string& k, const std::string& v) { c.member = as_long(k, v); },           \
           [](const RunConfig& c) { return std::to_string(c.member); }}
#define CHDRL_COUNT(name, member)                                                                                      \
    KeyDef{name, [](RunConfig& c, const std::string& k, const std::string& v) { c.member = as_count(k, v); },          \
           [](const RunConfig& c) { return std::to_string(c.member); }}
#define CHDRL_INT(name, member)                                                                                        \
    KeyDef{name,                                                                                                       \
           [](RunConfig& c, const std::string& k, const std::string& v) { c.member = static_cast<int>(as_long(k, v)); }, \
           [](const RunConfig& c) { return std::to_string(c.member); }}
#define CHDRL_BOOL(name, member)                                                                                       \
    KeyDef{name, [](RunConfig& c, const std::string& k, const std::string& v) { c.member = as_bool(k, v); },           \
           [](const RunConfig& c) { return fmt_bool(c.member); }}

const std::vector<KeyDef>& key_defs()
{
    static const std::vector<KeyDef> defs{
        KeyDef{"env", [](RunConfig& c, const std::string&, const std::string& v) { c.env = v; },
               [](const RunConfig& c) { return c.env; }},
        KeyDef{"seed",
               [](RunConfig& c, const std::string& k, const std::string& v) {
                   c.seed = static_cast<std::uint64_t>(as_count(k, v));
               },
               [](const RunConfig& c) { return std::to_string(c.seed); }},
        KeyDef{"variant",
               [](RunConfig& c, const std::string&, const std::string& v) {
                   if (!is_variant(v))
                       throw Error("config key 'variant': unknown variant '" + v + "'");
                   c.variant = v;
               },
               [](const RunConfig& c) { return c.variant; }},
        CHDRL_LONG("T_g", T_g),
        CHDRL_LONG("T", T),
        CHDRL_LONG("T_m", T_m),
        CHDRL_DOUBLE("f", f),
        CHDRL_DOUBLE("p", p),
        CHDRL_COUNT("M_g", M_g),
        CHDRL_COUNT("M_l", M_l),
        CHDRL_INT("eval_episodes", eval_episodes),
        CHDRL_INT("horizon", horizon),
        CHDRL_BOOL("reset_flags_per_iteration", reset_flags_per_iteration),
        KeyDef{"hidden", [](RunConfig& c, const std::string& k, const std::string& v) { c.hidden = as_sizes(k, v); },
               [](const RunConfig& c) {
                   std::string s;
                   for (std::size_t i = 0; i < c.hidden.size(); ++i)
                       s += (i ? "," : "") + std::to_string(c.hidden[i]);
                   return s;
               }},
        CHDRL_BOOL("disable_ce", flags.disable_ce),
        CHDRL_BOOL("disable_lm", flags.disable_lm),
        CHDRL_BOOL("disable_gm", flags.disable_gm),
        CHDRL_BOOL("drop_ppo", flags.drop_ppo),
        CHDRL_BOOL("drop_cem", flags.drop_cem),
        CHDRL_BOOL("drop_sac", flags.drop_sac),
        CHDRL_BOOL("homogeneous_3sac", flags.homogeneous_3sac),
        CHDRL_BOOL("homogeneous_c3sac", flags.homogeneous_c3sac),

        CHDRL_DOUBLE("sac.gamma", sac.gamma),
        CHDRL_DOUBLE("sac.tau", sac.tau),
        CHDRL_DOUBLE("sac.alpha", sac.alpha),
        CHDRL_DOUBLE("sac.lr", sac.lr),
        CHDRL_COUNT("sac.batch_size", sac.batch_size),
        CHDRL_LONG("sac.start_steps", sac.start_steps),

        CHDRL_DOUBLE("ppo.gamma", ppo.gamma),
        CHDRL_DOUBLE("ppo.lambda", ppo.lambda),
        CHDRL_DOUBLE("ppo.clip", ppo.clip),
        CHDRL_INT("ppo.epochs", ppo.epochs),
        CHDRL_COUNT("ppo.minibatch", ppo.minibatch),
        CHDRL_DOUBLE("ppo.initial_log_std", ppo.initial_log_std),
        CHDRL_DOUBLE("ppo.lr", ppo.lr),

        CHDRL_COUNT("cem.population", cem.population),
        CHDRL_COUNT("cem.elites", cem.elites),
        CHDRL_DOUBLE("cem.initial_variance", cem.initial_variance),
        CHDRL_DOUBLE("cem.noise", cem.noise),
        CHDRL_DOUBLE("cem.noise_decay", cem.noise_decay),
        CHDRL_INT("cem.episodes_per_individual", cem.episodes_per_individual),
    };
    return defs;
}

#undef CHDRL_DOUBLE
#undef CHDRL_LONG
#undef CHDRL_COUNT
#undef CHDRL_INT
#undef CHDRL_BOOL

const KeyDef& find_key(const std::string& name)
{
    for (const KeyDef& d : key_defs())
        if (d.name == name)
            return d;
    throw Error("unknown config key '" + name + "'");
}

void require(bool ok, const std::string& key, const std::string& what)
{
    if (!ok)
        throw Error("config key '" + key + "': " + what);
}

struct Entry {
    std::string key;
    std::string value;
};

std::vector<Entry> split_text(const std::string& text)
{
    std::vector<Entry> out;
    std::string section;
    std::istringstream in(text);
    std::string raw;
    int lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        std::string line = raw;
        if (const auto hash = line.find('#'); hash != std::string::npos)
            line = line.substr(0, hash);
        line = trim(line);
        if (line.empty())
            continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw Error("config line " + std::to_string(lineno) + ": malformed section header");
            section = trim(line.substr(1, line.size() - 2));
            if (!section.empty() && section != "sac" && section != "ppo" && section != "cem")
                throw Error("config line " + std::to_string(lineno) + ": unknown section [" + section + "]");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw Error("config line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = unquote(trim(line.substr(eq + 1)));
        out.push_back({section.empty() ? key : section + "." + key, value});
    }
    return out;
}

} // namespace

const std::vector<std::string>& variant_names()
{
    static const std::vector<std::string> names{"cspc",     "cspc-ce",  "cspc-lm", "cspc-gm", "cspc-ppo", "cspc-cem",
                                                "cspc-sac", "c3sac",    "3sac",    "sac",     "ppo",      "cem"};
    return names;
}

bool is_variant(const std::string& name) { return std::ranges::find(variant_names(), name) != variant_names().end(); }

VariantFlags variant_flags(const std::string& name)
{
    VariantFlags f;
    const auto solo = [&f] {
        f.disable_ce = f.disable_lm = f.disable_gm = true;
    };
    if (name == "cspc") {
    } else if (name == "cspc-ce") {
        f.disable_ce = true;
    } else if (name == "cspc-lm") {
        f.disable_lm = true;
    } else if (name == "cspc-gm") {
        f.disable_gm = true;
    } else if (name == "cspc-ppo") {
        f.drop_ppo = true;
    } else if (name == "cspc-cem") {
        f.drop_cem = true;
    } else if (name == "cspc-sac") {
        f.drop_sac = true;
    } else if (name == "c3sac") {
        f.homogeneous_c3sac = true;
    } else if (name == "3sac") {
        f.homogeneous_3sac = true;
    } else if (name == "sac") {
        f.drop_ppo = f.drop_cem = true;
        solo();
    } else if (name == "ppo") {
        f.drop_sac = f.drop_cem = true;
        solo();
    } else if (name == "cem") {
        f.drop_sac = f.drop_ppo = true;
        solo();
    } else {
        throw Error("unknown variant '" + name + "'");
    }
    return f;
}

void RunConfig::validate() const
{
    require(is_env_id(env), "env", "unknown env id '" + env + "' (point-dense | point-sparse | deceptive-corridor)");
    require(T_g >= 0, "T_g", "must be non-negative");
    require(T >= 1, "T", "must be at least 1");
    require(T_m >= 1, "T_m", "must be at least 1");
    require(T_g <= T_m, "T_g", "must not exceed T_m");
    require(f >= 0.0, "f", "must be non-negative");
    require(p >= 0.0 && p <= 1.0, "p", "must lie in the valid range [0,1], got " + fmt_double(p));
    require(M_l >= 1, "M_l", "must be at least 1");
    require(eval_episodes >= 1, "eval_episodes", "must be at least 1");
    require(horizon >= 0, "horizon", "must be non-negative (0 keeps the environment's horizon)");
    require(!hidden.empty(), "hidden", "needs at least one hidden layer");
    for (Index h : hidden)
        require(h >= 1, "hidden", "layer sizes must be positive");

    const VariantFlags& v = flags;
    require(!(v.homogeneous_3sac && v.homogeneous_c3sac), "homogeneous_3sac",
            "cannot be combined with homogeneous_c3sac");
    const bool homogeneous = v.homogeneous_3sac || v.homogeneous_c3sac;
    require(!(homogeneous && (v.drop_sac || v.drop_ppo || v.drop_cem)), homogeneous ? "homogeneous_c3sac" : "drop_sac",
            "homogeneous modes cannot drop agents");
    require(!(v.drop_sac && v.drop_ppo && v.drop_cem), "drop_sac", "at least one agent must remain");

    require(sac.gamma >= 0.0 && sac.gamma <= 1.0, "sac.gamma", "must lie in [0,1]");
    require(sac.tau > 0.0 && sac.tau <= 1.0, "sac.tau", "must lie in (0,1]");
    require(sac.alpha > 0.0, "sac.alpha", "must be positive");
    require(sac.lr > 0.0, "sac.lr", "must be positive");
    require(sac.batch_size >= 1, "sac.batch_size", "must be at least 1");
    require(sac.start_steps >= 0, "sac.start_steps", "must be non-negative");

    require(ppo.gamma >= 0.0 && ppo.gamma <= 1.0, "ppo.gamma", "must lie in [0,1]");
    require(ppo.lambda >= 0.0 && ppo.lambda <= 1.0, "ppo.lambda", "must lie in [0,1]");
    require(ppo.clip > 0.0 && ppo.clip < 1.0, "ppo.clip", "must lie in (0,1)");
    require(ppo.epochs >= 1, "ppo.epochs", "must be at least 1");
    require(ppo.minibatch >= 1, "ppo.minibatch", "must be at least 1");
    require(ppo.lr > 0.0, "ppo.lr", "must be positive");

    require(cem.population >= 1, "cem.population", "must be at least 1");
    require(cem.elites >= 1 && cem.elites <= cem.population, "cem.elites", "must lie in [1, cem.population]");
    require(cem.initial_variance > 0.0, "cem.initial_variance", "must be positive");
    require(cem.noise >= 0.0, "cem.noise", "must be non-negative");
    require(cem.noise_decay > 0.0 && cem.noise_decay <= 1.0, "cem.noise_decay", "must lie in (0,1]");
    require(cem.episodes_per_individual >= 1, "cem.episodes_per_individual", "must be at least 1");
}

RunConfig parse_config(const std::string& text, const std::vector<std::string>& overrides)
{
    std::vector<Entry> entries = split_text(text);
    for (const std::string& o : overrides) {
        const auto eq = o.find('=');
        if (eq == std::string::npos)
            throw Error("override '" + o + "' is not of the form key=value");
        entries.push_back({trim(o.substr(0, eq)), unquote(trim(o.substr(eq + 1)))});
    }

    RunConfig cfg;
    // The variant sets the baseline flags; explicit flag keys then refine it.
    for (auto it = entries.rbegin(); it != entries.rend(); ++it) {
        if (it->key == "variant") {
            find_key("variant").set(cfg, it->key, it->value);
            cfg.flags = variant_flags(cfg.variant);
            break;
        }
    }
    for (const Entry& e : entries)
        if (e.key != "variant")
            find_key(e.key).set(cfg, e.key, e.value);
    cfg.validate();
    return cfg;
}

RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides)
{
    std::ifstream in(path);
    if (!in)
        throw Error("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), overrides);
}

std::string to_text(const RunConfig& config)
{
    std::ostringstream out;
    std::string section;
    for (const KeyDef& d : key_defs()) {
        const auto dot = d.name.find('.');
        const std::string sec = dot == std::string::npos ? "" : d.name.substr(0, dot);
        const std::string key = dot == std::string::npos ? d.name : d.name.substr(dot + 1);
        if (sec != section) {
            out << "\n[" << sec << "]\n";
            section = sec;
        }
        out << key << " = " << d.get(config) << "\n";
    }
    return out.str();
}

} // namespace chdrl
