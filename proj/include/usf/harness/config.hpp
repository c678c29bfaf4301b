#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "usf/agents/agent.hpp"
#include "usf/envs/grid_world.hpp"
#include "usf/envs/reacher.hpp"

namespace usf::harness {

enum class EnvKind { gridworld, reacher };

std::string to_string(EnvKind kind);
EnvKind env_kind_from_string(const std::string& name);

struct HerConfig {
    int future_steps = 30;
    double sampling_probability = 0.5;
};

struct ExperimentConfig {
    EnvKind env = EnvKind::gridworld;
    /// "four_rooms" or a path to a text map.
    std::string layout = "four_rooms";
    envs::GridConfig grid{};
    envs::ReacherConfig reacher{};
    agents::AgentConfig agent{};
    HerConfig her{};

    int stage1_steps = 48000;
    int stage2_steps = 48000;
    int goals_per_stage = 12;
    int holdout_goals = 12;
    int eval_every = 500;
    int eval_episodes_per_goal = 1;
    std::size_t replay_capacity = 100000;
    std::vector<std::uint64_t> seeds{0};
    /// Worker threads for seeds; 0 uses the hardware concurrency.
    int threads = 0;

    /// Discount shared by the environment and the agent.
    double discount() const { return env == EnvKind::gridworld ? grid.gamma : reacher.gamma; }
    bool her_enabled() const { return agents::uses_her(agent.kind); }

    /// Throws ConfigError on inconsistent settings (agent/env mismatch, bad ranges).
    void validate() const;
};

/// Defaults of the hyperparameter table matching (env, kind, structure):
/// learning rates, epsilon, lambda, batch size, discount, target period and
/// HER settings, plus stage lengths and step limits.
ExperimentConfig default_config(EnvKind env, agents::AgentKind kind,
                                envs::RewardStructure structure = envs::RewardStructure::constant);

/// Lambda of the hyperparameter tables for a gridworld agent.
double table_lambda(agents::AgentKind kind, envs::RewardStructure structure);

} // namespace usf::harness
