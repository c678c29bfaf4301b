#include <stdexcept>
#include <utility>

#include "usf/agents/agent.hpp"
#include "usf/core/error.hpp"
#include "usf/core/random.hpp"

namespace usf::agents {

namespace {

const std::vector<std::pair<AgentKind, std::string>>& kind_names() {
    static const std::vector<std::pair<AgentKind, std::string>> names = {
        {AgentKind::dqn, "dqn"},
        {AgentKind::usf_dqn, "usf_dqn"},
        {AgentKind::usf_dqn_onehot, "usf_dqn_onehot"},
        {AgentKind::dqn_her, "dqn_her"},
        {AgentKind::usf_dqn_her, "usf_dqn_her"},
        {AgentKind::ddpg, "ddpg"},
        {AgentKind::usf_ddpg, "usf_ddpg"},
        {AgentKind::usf_rloss_ablation, "usf_rloss_ablation"},
    };
    return names;
}

void require_discrete(const EnvSpec& env) {
    if (!env.actions.discrete()) {
        throw ConfigError("this agent needs a finite action set");
    }
}

} // namespace

std::string to_string(AgentKind kind) {
    for (const auto& [k, name] : kind_names()) {
        if (k == kind) {
            return name;
        }
    }
    return "unknown";
}

AgentKind agent_kind_from_string(const std::string& name) {
    std::string valid;
    for (const auto& [k, n] : kind_names()) {
        if (n == name) {
            return k;
        }
        valid += (valid.empty() ? "" : ", ") + n;
    }
    throw ConfigError("unknown agent kind '" + name + "' (valid: " + valid + ")");
}

const std::vector<AgentKind>& all_agent_kinds() {
    static const std::vector<AgentKind> kinds = [] {
        std::vector<AgentKind> out;
        for (const auto& entry : kind_names()) {
            out.push_back(entry.first);
        }
        return out;
    }();
    return kinds;
}

bool uses_her(AgentKind kind) {
    return kind == AgentKind::dqn_her || kind == AgentKind::usf_dqn_her;
}

bool uses_usf(AgentKind kind) {
    return kind != AgentKind::dqn && kind != AgentKind::dqn_her && kind != AgentKind::ddpg;
}

bool is_continuous(AgentKind kind) {
    return kind == AgentKind::ddpg || kind == AgentKind::usf_ddpg;
}

// ---- DQN ----

DqnAgent::DqnAgent(const AgentConfig& config, const EnvSpec& env, std::uint64_t seed)
    : Agent(config),
      online_(env.state_dim, env.goal_dim, env.actions.count, 0, TowerWidths{}, seed),
      target_(online_),
      optimizer_(std::as_const(online_).nets()) {
    require_discrete(env);
    schedule_.mode = TargetSchedule::Mode::hard;
    schedule_.every = config.target_update_every;
}

Action DqnAgent::act(const Eigen::VectorXd& s, const Eigen::VectorXd& g, Rng& rng) const {
    return select_action(online_.q_values(s, g), config_.epsilon, rng);
}

Action DqnAgent::greedy(const Eigen::VectorXd& s, const Eigen::VectorXd& g) const {
    return argmax(online_.q_values(s, g));
}

LossReport DqnAgent::update(const replay::Batch& batch) {
    const BatchMatrices b = to_matrices(batch);
    const Eigen::VectorXd y = dqn_target(target_, b);
    std::vector<Eigen::VectorXd> grads;
    const LossReport report = dqn_loss(online_, b, y, &grads);
    optimizer_.step(online_.nets(), grads, config_.lr, config_.clip_norm);
    schedule_.after_update(target_.nets(), std::as_const(online_).nets());
    return report;
}

void DqnAgent::save(nn::Archive& archive) const {
    archive.put_text("agent.kind", to_string(kind()));
    archive.put_int("agent.updates", schedule_.updates);
    online_.save(archive, "online");
    target_.save(archive, "target");
    for (std::size_t k = 0; k < optimizer_.states().size(); ++k) {
        nn::put_adam(archive, "adam." + std::to_string(k), optimizer_.states()[k]);
    }
}

void DqnAgent::load(const nn::Archive& archive) {
    online_.load(archive, "online");
    target_.load(archive, "target");
    for (std::size_t k = 0; k < optimizer_.states().size(); ++k) {
        optimizer_.states()[k] = nn::get_adam(archive, "adam." + std::to_string(k));
    }
    schedule_.updates = archive.integer("agent.updates");
}

// ---- USF-DQN ----

namespace {

UsfShape discrete_usf_shape(const AgentConfig& config, const EnvSpec& env) {
    UsfShape shape;
    shape.state_dim = env.state_dim;
    shape.goal_dim = env.goal_dim;
    shape.action_count = env.actions.count;
    shape.feature_dim = config.feature_dim;
    shape.mode = (config.kind == AgentKind::usf_dqn_onehot || config.force_one_hot) ? PhiMode::one_hot
                                                                                      : PhiMode::learned;
    return shape;
}

} // namespace

UsfDqnAgent::UsfDqnAgent(const AgentConfig& config, const EnvSpec& env, std::uint64_t seed)
    : Agent(config),
      online_(discrete_usf_shape(config, env), seed, env.one_hot, env.one_hot_dim),
      target_(online_),
      objective_(config.kind == AgentKind::usf_rloss_ablation ? UsfObjective::reward_loss : UsfObjective::q_loss),
      optimizer_(std::as_const(online_).nets()) {
    require_discrete(env);
    if (!(config.lambda >= 0.0)) {
        throw ConfigError("lambda must be non-negative");
    }
    schedule_.mode = TargetSchedule::Mode::hard;
    schedule_.every = config.target_update_every;
}

Action UsfDqnAgent::act(const Eigen::VectorXd& s, const Eigen::VectorXd& g, Rng& rng) const {
    return select_action(online_.q_values(s, g), config_.epsilon, rng);
}

Action UsfDqnAgent::greedy(const Eigen::VectorXd& s, const Eigen::VectorXd& g) const {
    return argmax(online_.q_values(s, g));
}

LossReport UsfDqnAgent::update(const replay::Batch& batch) {
    const BatchMatrices b = to_matrices(batch);
    const UsfTargets targets = usf_targets(target_, b);
    std::vector<Eigen::VectorXd> grads;
    const LossReport report = usf_loss(online_, b, targets, config_.lambda, &grads, objective_);
    optimizer_.step(online_.nets(), grads, config_.lr, config_.clip_norm);
    schedule_.after_update(target_.nets(), std::as_const(online_).nets());
    return report;
}

void UsfDqnAgent::save(nn::Archive& archive) const {
    archive.put_text("agent.kind", to_string(kind()));
    archive.put_text("agent.phi_mode", to_string(online_.shape().mode));
    archive.put_int("agent.updates", schedule_.updates);
    online_.save(archive, "online");
    target_.save(archive, "target");
    for (std::size_t k = 0; k < optimizer_.states().size(); ++k) {
        nn::put_adam(archive, "adam." + std::to_string(k), optimizer_.states()[k]);
    }
}

void UsfDqnAgent::load(const nn::Archive& archive) {
    if (archive.contains("agent.phi_mode") && archive.text("agent.phi_mode") != to_string(online_.shape().mode)) {
        throw ConfigError("checkpoint phi mode '" + archive.text("agent.phi_mode") + "' does not match the agent");
    }
    online_.load(archive, "online");
    target_.load(archive, "target");
    for (std::size_t k = 0; k < optimizer_.states().size(); ++k) {
        optimizer_.states()[k] = nn::get_adam(archive, "adam." + std::to_string(k));
    }
    schedule_.updates = archive.integer("agent.updates");
}

} // namespace usf::agents
