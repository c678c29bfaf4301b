#include "usf/harness/oracle_agent.hpp"

#include <cmath>

#include "usf/core/error.hpp"
#include "usf/oracle/tabular.hpp"

namespace usf::harness {

OracleAgent::OracleAgent(const envs::GridWorld& env)
    : agents::Agent(agents::AgentConfig{}), env_(std::make_shared<const envs::GridWorld>(env)) {}

const std::vector<std::size_t>& OracleAgent::policy_for(const Eigen::VectorXd& g) const {
    const envs::Cell goal = env_->decode(g);
    const std::size_t key = env_->layout().index_checked(goal);
    auto it = policies_.find(key);
    if (it == policies_.end()) {
        const oracle::TabularMdp mdp = oracle::grid_mdp(*env_, goal, envs::RewardStructure::constant);
        it = policies_.emplace(key, oracle::greedy_policy(oracle::value_iteration(mdp, 1e-12))).first;
    }
    return it->second;
}

Action OracleAgent::greedy(const Eigen::VectorXd& s, const Eigen::VectorXd& g) const {
    const std::size_t cell = env_->layout().index_checked(env_->decode(s));
    return policy_for(g)[cell];
}

Action OracleAgent::act(const Eigen::VectorXd& s, const Eigen::VectorXd& g, Rng& /*rng*/) const {
    return greedy(s, g);
}

agents::LossReport OracleAgent::update(const replay::Batch& /*batch*/) {
    const double nan = std::nan("");
    return {0.0, 0.0, nan, 0.0};
}

void OracleAgent::save(nn::Archive& /*archive*/) const {
    throw Unsupported("the oracle agent has no parameters to checkpoint");
}

void OracleAgent::load(const nn::Archive& /*archive*/) {
    throw Unsupported("the oracle agent has no parameters to checkpoint");
}

} // namespace usf::harness
