#pragma once

#include <map>
#include <memory>
#include <vector>

#include "usf/agents/agent.hpp"
#include "usf/envs/grid_world.hpp"

namespace usf::harness {

/// Gridworld agent that follows the value-iteration optimal policy of the
/// constant structure (shortest paths) for whatever goal it is given. It
/// does not learn and cannot be checkpointed. The policy cache makes it
/// unsafe to share across threads.
class OracleAgent final : public agents::Agent {
public:
    explicit OracleAgent(const envs::GridWorld& env);

    agents::AgentKind kind() const override { return config_.kind; }
    Action act(const Eigen::VectorXd& s, const Eigen::VectorXd& g, Rng& rng) const override;
    Action greedy(const Eigen::VectorXd& s, const Eigen::VectorXd& g) const override;
    agents::LossReport update(const replay::Batch& batch) override;
    std::int64_t update_count() const override { return 0; }
    void save(nn::Archive& archive) const override;
    void load(const nn::Archive& archive) override;
    std::unique_ptr<agents::Agent> clone() const override { return std::make_unique<OracleAgent>(*this); }

private:
    const std::vector<std::size_t>& policy_for(const Eigen::VectorXd& g) const;

    std::shared_ptr<const envs::GridWorld> env_;
    mutable std::map<std::size_t, std::vector<std::size_t>> policies_;
};

} // namespace usf::harness
