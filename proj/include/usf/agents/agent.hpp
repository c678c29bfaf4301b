#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "usf/agents/losses.hpp"
#include "usf/agents/networks.hpp"
#include "usf/envs/goal_env.hpp"
#include "usf/nn/archive.hpp"
#include "usf/replay/replay_store.hpp"

namespace usf::agents {

enum class AgentKind { dqn, usf_dqn, usf_dqn_onehot, dqn_her, usf_dqn_her, ddpg, usf_ddpg, usf_rloss_ablation };

std::string to_string(AgentKind kind);
AgentKind agent_kind_from_string(const std::string& name);
const std::vector<AgentKind>& all_agent_kinds();
bool uses_her(AgentKind kind);
bool uses_usf(AgentKind kind);
bool is_continuous(AgentKind kind);

struct AgentConfig {
    AgentKind kind = AgentKind::usf_dqn;
    double lr = 5e-4;
    double epsilon = 0.25;
    double lambda = 0.01;
    std::size_t batch_size = 32;
    /// Hard target copy every this many updates (finite-action agents).
    int target_update_every = 10;
    double actor_lr = 1e-4;
    double critic_lr = 1e-3;
    /// Polyak rate of the continuous-action agents' targets.
    double tau = 0.005;
    /// Exploration noise standard deviation as a fraction of the action bound.
    double noise_fraction = 0.1;
    std::size_t feature_dim = 64;
    /// Global gradient-norm clip; 0 disables.
    double clip_norm = 0.0;
    /// Overrides the phi mode implied by the kind (used by tests and the ablation).
    bool force_one_hot = false;
};

/// What an agent needs to know about its environment.
struct EnvSpec {
    std::size_t state_dim = 0;
    std::size_t goal_dim = 0;
    envs::ActionSpace actions{};
    FeatureFn one_hot;
    std::size_t one_hot_dim = 0;
};

class Agent {
public:
    virtual ~Agent() = default;

    virtual AgentKind kind() const = 0;
    /// Exploratory action (epsilon-greedy or Gaussian noise).
    virtual Action act(const Eigen::VectorXd& s, const Eigen::VectorXd& g, Rng& rng) const = 0;
    virtual Action greedy(const Eigen::VectorXd& s, const Eigen::VectorXd& g) const = 0;
    /// One gradient step on the batch, followed by the target schedule.
    virtual LossReport update(const replay::Batch& batch) = 0;
    virtual std::int64_t update_count() const = 0;

    virtual void save(nn::Archive& archive) const = 0;
    /// Restores parameters, targets and optimizer state saved by an agent
    /// built with the same configuration.
    virtual void load(const nn::Archive& archive) = 0;
    virtual std::unique_ptr<Agent> clone() const = 0;

    const AgentConfig& config() const { return config_; }

protected:
    explicit Agent(AgentConfig config) : config_(std::move(config)) {}
    AgentConfig config_;
};

class DqnAgent final : public Agent {
public:
    DqnAgent(const AgentConfig& config, const EnvSpec& env, std::uint64_t seed);

    AgentKind kind() const override { return config_.kind; }
    Action act(const Eigen::VectorXd& s, const Eigen::VectorXd& g, Rng& rng) const override;
    Action greedy(const Eigen::VectorXd& s, const Eigen::VectorXd& g) const override;
    LossReport update(const replay::Batch& batch) override;
    std::int64_t update_count() const override { return schedule_.updates; }
    void save(nn::Archive& archive) const override;
    void load(const nn::Archive& archive) override;
    std::unique_ptr<Agent> clone() const override { return std::make_unique<DqnAgent>(*this); }

    QNetwork& online() { return online_; }
    const QNetwork& online() const { return online_; }
    const QNetwork& target() const { return target_; }

private:
    QNetwork online_;
    QNetwork target_;
    nn::AdamGroup optimizer_;
    TargetSchedule schedule_;
};

class UsfDqnAgent final : public Agent {
public:
    UsfDqnAgent(const AgentConfig& config, const EnvSpec& env, std::uint64_t seed);

    AgentKind kind() const override { return config_.kind; }
    Action act(const Eigen::VectorXd& s, const Eigen::VectorXd& g, Rng& rng) const override;
    Action greedy(const Eigen::VectorXd& s, const Eigen::VectorXd& g) const override;
    LossReport update(const replay::Batch& batch) override;
    std::int64_t update_count() const override { return schedule_.updates; }
    void save(nn::Archive& archive) const override;
    void load(const nn::Archive& archive) override;
    std::unique_ptr<Agent> clone() const override { return std::make_unique<UsfDqnAgent>(*this); }

    UsfNetwork& online() { return online_; }
    const UsfNetwork& online() const { return online_; }
    const UsfNetwork& target() const { return target_; }
    UsfObjective objective() const { return objective_; }

private:
    UsfNetwork online_;
    UsfNetwork target_;
    UsfObjective objective_;
    nn::AdamGroup optimizer_;
    TargetSchedule schedule_;
};

class DdpgAgent final : public Agent {
public:
    DdpgAgent(const AgentConfig& config, const EnvSpec& env, std::uint64_t seed);

    AgentKind kind() const override { return config_.kind; }
    Action act(const Eigen::VectorXd& s, const Eigen::VectorXd& g, Rng& rng) const override;
    Action greedy(const Eigen::VectorXd& s, const Eigen::VectorXd& g) const override;
    LossReport update(const replay::Batch& batch) override;
    std::int64_t update_count() const override { return schedule_.updates; }
    void save(nn::Archive& archive) const override;
    void load(const nn::Archive& archive) override;
    std::unique_ptr<Agent> clone() const override { return std::make_unique<DdpgAgent>(*this); }

    const ActorNetwork& actor() const { return actor_; }
    const QNetwork& critic() const { return critic_; }

private:
    ActorNetwork actor_;
    ActorNetwork actor_target_;
    QNetwork critic_;
    QNetwork critic_target_;
    nn::AdamGroup actor_optimizer_;
    nn::AdamGroup critic_optimizer_;
    TargetSchedule schedule_;
};

class UsfDdpgAgent final : public Agent {
public:
    UsfDdpgAgent(const AgentConfig& config, const EnvSpec& env, std::uint64_t seed);

    AgentKind kind() const override { return config_.kind; }
    Action act(const Eigen::VectorXd& s, const Eigen::VectorXd& g, Rng& rng) const override;
    Action greedy(const Eigen::VectorXd& s, const Eigen::VectorXd& g) const override;
    LossReport update(const replay::Batch& batch) override;
    std::int64_t update_count() const override { return schedule_.updates; }
    void save(nn::Archive& archive) const override;
    void load(const nn::Archive& archive) override;
    std::unique_ptr<Agent> clone() const override { return std::make_unique<UsfDdpgAgent>(*this); }

    ActorNetwork& actor() { return actor_; }
    const ActorNetwork& actor() const { return actor_; }
    const UsfNetwork& critic() const { return critic_; }

private:
    ActorNetwork actor_;
    ActorNetwork actor_target_;
    UsfNetwork critic_;
    UsfNetwork critic_target_;
    nn::AdamGroup actor_optimizer_;
    nn::AdamGroup critic_optimizer_;
    TargetSchedule schedule_;
};

/// Builds the agent for `config.kind`.
std::unique_ptr<Agent> make_agent(const AgentConfig& config, const EnvSpec& env, std::uint64_t seed);
/// EnvSpec of an environment; gridworlds also supply their one-hot cell features.
EnvSpec env_spec(const envs::GoalEnv& env);

void save_checkpoint(const Agent& agent, const std::string& path);
/// Loads parameters into an agent of the recorded kind; throws ConfigError on a kind mismatch.
void load_checkpoint(Agent& agent, const std::string& path);

} // namespace usf::agents
