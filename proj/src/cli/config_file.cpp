#include "usf/cli/config_file.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "usf/core/error.hpp"

namespace usf::cli {

namespace {

using harness::ExperimentConfig;

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) {
        return "";
    }
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
    double out = 0.0;
    const char* end = v.data() + v.size();
    const auto [ptr, ec] = std::from_chars(v.data(), end, out);
    if (ec != std::errc() || ptr != end) {
        throw ConfigError(key + ": '" + v + "' is not a number");
    }
    return out;
}

long long to_integer(const std::string& key, const std::string& v) {
    long long out = 0;
    const char* end = v.data() + v.size();
    const auto [ptr, ec] = std::from_chars(v.data(), end, out);
    if (ec != std::errc() || ptr != end) {
        throw ConfigError(key + ": '" + v + "' is not an integer");
    }
    return out;
}

int to_int(const std::string& key, const std::string& v) {
    const long long x = to_integer(key, v);
    if (x < -2147483647LL || x > 2147483647LL) {
        throw ConfigError(key + ": " + v + " is out of range");
    }
    return static_cast<int>(x);
}

std::size_t to_size(const std::string& key, const std::string& v) {
    const long long x = to_integer(key, v);
    if (x < 0) {
        throw ConfigError(key + " must be non-negative");
    }
    return static_cast<std::size_t>(x);
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1") {
        return true;
    }
    if (v == "false" || v == "0") {
        return false;
    }
    throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

template <typename Field>
ConfigKey real(std::string section, std::string name, std::string help, Field field) {
    const std::string dotted = section + "." + name;
    return {std::move(section), std::move(name), std::move(help),
            [field](const ExperimentConfig& c) { return format_double(field(const_cast<ExperimentConfig&>(c))); },
            [field, dotted](ExperimentConfig& c, const std::string& v) { field(c) = to_double(dotted, v); }};
}

template <typename Field>
ConfigKey integer(std::string section, std::string name, std::string help, Field field) {
    const std::string dotted = section + "." + name;
    return {std::move(section), std::move(name), std::move(help),
            [field](const ExperimentConfig& c) { return std::to_string(field(const_cast<ExperimentConfig&>(c))); },
            [field, dotted](ExperimentConfig& c, const std::string& v) { field(c) = to_int(dotted, v); }};
}

template <typename Field>
ConfigKey size(std::string section, std::string name, std::string help, Field field) {
    const std::string dotted = section + "." + name;
    return {std::move(section), std::move(name), std::move(help),
            [field](const ExperimentConfig& c) { return std::to_string(field(const_cast<ExperimentConfig&>(c))); },
            [field, dotted](ExperimentConfig& c, const std::string& v) { field(c) = to_size(dotted, v); }};
}

std::vector<ConfigKey> build_keys() {
    std::vector<ConfigKey> k;
    using C = ExperimentConfig;
    k.push_back({"experiment", "env", "environment: gridworld or reacher (selector)",
                 [](const C& c) { return harness::to_string(c.env); },
                 [](C& c, const std::string& v) { c.env = harness::env_kind_from_string(v); }});
    k.push_back({"experiment", "agent",
                 "agent kind: dqn, usf_dqn, usf_dqn_onehot, dqn_her, usf_dqn_her, ddpg, usf_ddpg, "
                 "usf_rloss_ablation (selector)",
                 [](const C& c) { return agents::to_string(c.agent.kind); },
                 [](C& c, const std::string& v) { c.agent.kind = agents::agent_kind_from_string(v); }});
    k.push_back(integer("experiment", "stage1_steps", "environment steps on the source goals",
                        [](C& c) -> int& { return c.stage1_steps; }));
    k.push_back(integer("experiment", "stage2_steps", "environment steps on the target goals (0 skips the swap)",
                        [](C& c) -> int& { return c.stage2_steps; }));
    k.push_back(integer("experiment", "goals_per_stage", "goals in the source and target sets",
                        [](C& c) -> int& { return c.goals_per_stage; }));
    k.push_back(integer("experiment", "holdout_goals", "goals in the hold-out set",
                        [](C& c) -> int& { return c.holdout_goals; }));
    k.push_back(integer("experiment", "eval_every", "environment steps between greedy evaluations",
                        [](C& c) -> int& { return c.eval_every; }));
    k.push_back(integer("experiment", "eval_episodes_per_goal", "greedy episodes per goal and evaluation",
                        [](C& c) -> int& { return c.eval_episodes_per_goal; }));
    k.push_back(size("experiment", "replay_capacity", "transitions kept by each replay store",
                     [](C& c) -> std::size_t& { return c.replay_capacity; }));
    k.push_back({"experiment", "seeds", "seed list, e.g. 0..4 or 0,3,7",
                 [](const C& c) { return format_seed_list(c.seeds); },
                 [](C& c, const std::string& v) { c.seeds = parse_seed_list(v); }});
    k.push_back(integer("experiment", "threads", "worker threads for seeds (0 = all cores)",
                        [](C& c) -> int& { return c.threads; }));

    k.push_back({"gridworld", "structure", "reward structure: constant, room or mixed (selector)",
                 [](const C& c) { return envs::to_string(c.grid.structure); },
                 [](C& c, const std::string& v) { c.grid.structure = envs::reward_structure_from_string(v); }});
    k.push_back({"gridworld", "layout", "four_rooms or the path of a text map",
                 [](const C& c) { return c.layout; }, [](C& c, const std::string& v) { c.layout = v; }});
    k.push_back(integer("gridworld", "max_steps", "episode step limit",
                        [](C& c) -> int& { return c.grid.max_steps; }));

    k.push_back(real("reacher", "link1", "upper link length (m)", [](C& c) -> double& { return c.reacher.link1; }));
    k.push_back(real("reacher", "link2", "lower link length (m)", [](C& c) -> double& { return c.reacher.link2; }));
    k.push_back(real("reacher", "dt", "integration step (s)", [](C& c) -> double& { return c.reacher.dt; }));
    k.push_back(real("reacher", "threshold", "goal distance counted as reached (m)",
                     [](C& c) -> double& { return c.reacher.threshold; }));
    k.push_back(real("reacher", "action_bound", "joint velocity bound (rad/s)",
                     [](C& c) -> double& { return c.reacher.action_bound; }));
    k.push_back(integer("reacher", "max_steps", "episode step limit",
                        [](C& c) -> int& { return c.reacher.max_steps; }));
    k.push_back(real("reacher", "region_distance", "distance of the training regions from the base (m)",
                     [](C& c) -> double& { return c.reacher.region_distance; }));
    k.push_back(real("reacher", "region_radius", "radius of each training region (m)",
                     [](C& c) -> double& { return c.reacher.region_radius; }));

    k.push_back(real("hyperparameters", "lr", "learning rate (finite-action agents)",
                     [](C& c) -> double& { return c.agent.lr; }));
    k.push_back(real("hyperparameters", "epsilon", "epsilon-greedy exploration rate",
                     [](C& c) -> double& { return c.agent.epsilon; }));
    k.push_back(real("hyperparameters", "lambda", "weight of the successor-feature loss",
                     [](C& c) -> double& { return c.agent.lambda; }));
    k.push_back(size("hyperparameters", "batch_size", "minibatch size",
                     [](C& c) -> std::size_t& { return c.agent.batch_size; }));
    k.push_back({"hyperparameters", "gamma", "discount factor",
                 [](const C& c) { return format_double(c.discount()); },
                 [](C& c, const std::string& v) {
                     c.grid.gamma = c.reacher.gamma = to_double("hyperparameters.gamma", v);
                 }});
    k.push_back(integer("hyperparameters", "target_update_freq", "updates between hard target copies",
                        [](C& c) -> int& { return c.agent.target_update_every; }));
    k.push_back(real("hyperparameters", "actor_lr", "actor learning rate (DDPG agents)",
                     [](C& c) -> double& { return c.agent.actor_lr; }));
    k.push_back(real("hyperparameters", "critic_lr", "critic learning rate (DDPG agents)",
                     [](C& c) -> double& { return c.agent.critic_lr; }));
    k.push_back(real("hyperparameters", "tau", "Polyak rate of the DDPG targets",
                     [](C& c) -> double& { return c.agent.tau; }));
    k.push_back(real("hyperparameters", "noise_fraction", "exploration noise sd as a fraction of the action bound",
                     [](C& c) -> double& { return c.agent.noise_fraction; }));
    k.push_back(size("hyperparameters", "feature_dim", "successor feature dimension (learned phi)",
                     [](C& c) -> std::size_t& { return c.agent.feature_dim; }));
    k.push_back(real("hyperparameters", "clip_norm", "global gradient norm clip (0 = off)",
                     [](C& c) -> double& { return c.agent.clip_norm; }));
    k.push_back({"hyperparameters", "force_one_hot", "use one-hot cell features regardless of the agent kind",
                 [](const C& c) { return std::string(c.agent.force_one_hot ? "true" : "false"); },
                 [](C& c, const std::string& v) {
                     c.agent.force_one_hot = to_bool("hyperparameters.force_one_hot", v);
                 }});

    k.push_back(integer("her", "future_steps", "window of future states used as hindsight goals",
                        [](C& c) -> int& { return c.her.future_steps; }));
    k.push_back(real("her", "sampling_probability", "chance that a minibatch element comes from the HER store",
                     [](C& c) -> double& { return c.her.sampling_probability; }));
    return k;
}

std::string valid_keys() {
    std::string out;
    for (const ConfigKey& key : config_keys()) {
        out += (out.empty() ? "" : ", ") + key.dotted();
    }
    return out;
}

} // namespace

const std::vector<ConfigKey>& config_keys() {
    static const std::vector<ConfigKey> keys = build_keys();
    return keys;
}

const ConfigKey& find_key(const std::string& dotted) {
    for (const ConfigKey& key : config_keys()) {
        if (key.dotted() == dotted) {
            return key;
        }
    }
    throw ConfigError("unknown key '" + dotted + "'; valid keys: " + valid_keys());
}

bool is_selector(const std::string& dotted) {
    return dotted == "experiment.env" || dotted == "experiment.agent" || dotted == "gridworld.structure";
}

Entries parse_entries(const std::string& text, const std::string& origin) {
    Entries entries;
    std::istringstream in(text);
    std::string line;
    std::string section;
    int number = 0;
    while (std::getline(in, line)) {
        ++number;
        const auto hash = line.find('#');
        const std::string body = trim(hash == std::string::npos ? line : line.substr(0, hash));
        const std::string where = origin + ":" + std::to_string(number);
        if (body.empty()) {
            continue;
        }
        if (body.front() == '[') {
            if (body.back() != ']') {
                throw ConfigError(where + ": malformed section header '" + body + "'");
            }
            section = trim(body.substr(1, body.size() - 2));
            continue;
        }
        const auto eq = body.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(where + ": expected key = value, got '" + body + "'");
        }
        if (section.empty()) {
            throw ConfigError(where + ": key outside any [section]");
        }
        const std::string dotted = section + "." + trim(body.substr(0, eq));
        try {
            find_key(dotted);
        } catch (const ConfigError& e) {
            throw ConfigError(where + ": " + e.what());
        }
        entries.emplace_back(dotted, trim(body.substr(eq + 1)));
    }
    return entries;
}

Entries read_entries(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config file '" + path + "'");
    }
    std::ostringstream text;
    text << in.rdbuf();
    return parse_entries(text.str(), path);
}

std::pair<std::string, std::string> parse_assignment(const std::string& text) {
    const auto eq = text.find('=');
    if (eq == std::string::npos) {
        throw ConfigError("override '" + text + "' is not of the form section.key=value");
    }
    const std::string dotted = trim(text.substr(0, eq));
    find_key(dotted);
    return {dotted, trim(text.substr(eq + 1))};
}

harness::ExperimentConfig build_config(const Entries& entries) {
    ExperimentConfig selectors;
    for (const auto& [dotted, value] : entries) {
        if (is_selector(dotted)) {
            find_key(dotted).set(selectors, value);
        }
    }
    ExperimentConfig config = harness::default_config(selectors.env, selectors.agent.kind, selectors.grid.structure);
    for (const auto& [dotted, value] : entries) {
        if (!is_selector(dotted)) {
            find_key(dotted).set(config, value);
        }
    }
    config.validate();
    return config;
}

harness::ExperimentConfig parse_config(const std::string& text) {
    return build_config(parse_entries(text));
}

std::string serialize(const harness::ExperimentConfig& config) {
    std::string out;
    std::string section;
    for (const ConfigKey& key : config_keys()) {
        if (key.section != section) {
            out += (section.empty() ? "[" : "\n[") + key.section + "]\n";
            section = key.section;
        }
        out += key.name + " = " + key.get(config) + "\n";
    }
    return out;
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
    std::vector<std::uint64_t> seeds;
    std::istringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        item = trim(item);
        if (item.empty()) {
            continue;
        }
        const auto dots = item.find("..");
        if (dots == std::string::npos) {
            const long long v = to_integer("seeds", item);
            if (v < 0) {
                throw ConfigError("seeds must be non-negative");
            }
            seeds.push_back(static_cast<std::uint64_t>(v));
            continue;
        }
        const long long lo = to_integer("seeds", trim(item.substr(0, dots)));
        const long long hi = to_integer("seeds", trim(item.substr(dots + 2)));
        if (lo < 0 || hi < lo) {
            throw ConfigError("bad seed range '" + item + "'");
        }
        for (long long s = lo; s <= hi; ++s) {
            seeds.push_back(static_cast<std::uint64_t>(s));
        }
    }
    if (seeds.empty()) {
        throw ConfigError("empty seed list '" + text + "'");
    }
    return seeds;
}

std::string format_seed_list(const std::vector<std::uint64_t>& seeds) {
    std::string out;
    for (std::uint64_t s : seeds) {
        out += (out.empty() ? "" : ",") + std::to_string(s);
    }
    return out;
}

std::string format_double(double value) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, ec == std::errc() ? ptr : buf);
}

} // namespace usf::cli
