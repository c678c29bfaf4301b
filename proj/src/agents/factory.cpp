#include <memory>

#include "usf/agents/agent.hpp"
#include "usf/core/error.hpp"
#include "usf/envs/grid_world.hpp"

namespace usf::agents {

std::unique_ptr<Agent> make_agent(const AgentConfig& config, const EnvSpec& env, std::uint64_t seed) {
    switch (config.kind) {
    case AgentKind::dqn:
    case AgentKind::dqn_her:
        return std::make_unique<DqnAgent>(config, env, seed);
    case AgentKind::usf_dqn:
    case AgentKind::usf_dqn_onehot:
    case AgentKind::usf_dqn_her:
    case AgentKind::usf_rloss_ablation:
        return std::make_unique<UsfDqnAgent>(config, env, seed);
    case AgentKind::ddpg:
        return std::make_unique<DdpgAgent>(config, env, seed);
    case AgentKind::usf_ddpg:
        return std::make_unique<UsfDdpgAgent>(config, env, seed);
    }
    throw ConfigError("unknown agent kind");
}

EnvSpec env_spec(const envs::GoalEnv& env) {
    EnvSpec spec;
    spec.state_dim = env.state_dim();
    spec.goal_dim = env.goal_dim();
    spec.actions = env.action_space();
    if (const auto* grid = dynamic_cast<const envs::GridWorld*>(&env)) {
        auto copy = std::make_shared<const envs::GridWorld>(*grid);
        spec.one_hot = [copy](const Eigen::VectorXd& s) { return copy->one_hot_phi(s); };
        spec.one_hot_dim = grid->layout().cell_count();
    }
    return spec;
}

void save_checkpoint(const Agent& agent, const std::string& path) {
    nn::Archive archive;
    agent.save(archive);
    archive.save(path);
}

void load_checkpoint(Agent& agent, const std::string& path) {
    const nn::Archive archive = nn::Archive::load(path);
    const std::string kind = archive.text("agent.kind");
    if (kind != to_string(agent.kind())) {
        throw ConfigError("checkpoint holds a '" + kind + "' agent, expected '" + to_string(agent.kind()) + "'");
    }
    agent.load(archive);
}

} // namespace usf::agents
