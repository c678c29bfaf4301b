#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "usf/harness/config.hpp"

namespace usf::cli {

/// A settable configuration key, addressed as "section.name".
struct ConfigKey {
    std::string section;
    std::string name;
    std::string help;
    std::function<std::string(const harness::ExperimentConfig&)> get;
    std::function<void(harness::ExperimentConfig&, const std::string&)> set;

    std::string dotted() const { return section + "." + name; }
};

/// Every key in file order. experiment.env, experiment.agent and
/// gridworld.structure are selectors: they pick the default table before
/// any other key is applied.
const std::vector<ConfigKey>& config_keys();
const ConfigKey& find_key(const std::string& dotted);
bool is_selector(const std::string& dotted);

/// Assignments in the order they were given ("section.name", value).
using Entries = std::vector<std::pair<std::string, std::string>>;

/// Parses the sectioned text format:
///
///     # comment
///     [hyperparameters]
///     lr = 5e-4
///
/// Keys outside a section, unknown keys and malformed lines throw
/// ConfigError naming the line.
Entries parse_entries(const std::string& text, const std::string& origin = "config");
Entries read_entries(const std::string& path);

/// "section.name=value" as given to --set.
std::pair<std::string, std::string> parse_assignment(const std::string& text);

/// Starts from default_config of the selectors (last value wins) and applies
/// the remaining entries in order. Validates the result.
harness::ExperimentConfig build_config(const Entries& entries);

harness::ExperimentConfig parse_config(const std::string& text);
/// Full config in the text format; parse_config(serialize(c)) reproduces c.
std::string serialize(const harness::ExperimentConfig& config);

/// "0,1,5" or "0..4" (inclusive) or a mix such as "0..2,7".
std::vector<std::uint64_t> parse_seed_list(const std::string& text);
std::string format_seed_list(const std::vector<std::uint64_t>& seeds);

/// Shortest text that parses back to the same double.
std::string format_double(double value);

} // namespace usf::cli
