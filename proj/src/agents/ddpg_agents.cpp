#include <utility>

#include "usf/agents/agent.hpp"
#include "usf/core/error.hpp"
#include "usf/core/random.hpp"

namespace usf::agents {

namespace {

const TowerWidths kContinuousWidths{{64}, 64, {64}};
const std::vector<std::size_t> kActorHidden{64, 64};

void require_continuous(const EnvSpec& env) {
    if (env.actions.discrete() || env.actions.dim == 0) {
        throw ConfigError("this agent needs a continuous action space");
    }
    if (!(env.actions.high > 0.0) || env.actions.low != -env.actions.high) {
        throw ConfigError("continuous actions must lie in a symmetric box [-b, b]");
    }
}

Eigen::MatrixXd to_matrix(const Eigen::VectorXd& v) {
    return Eigen::MatrixXd(v);
}

void save_group(nn::Archive& archive, const std::string& prefix, const nn::AdamGroup& group) {
    for (std::size_t k = 0; k < group.states().size(); ++k) {
        nn::put_adam(archive, prefix + "." + std::to_string(k), group.states()[k]);
    }
}

void load_group(const nn::Archive& archive, const std::string& prefix, nn::AdamGroup& group) {
    for (std::size_t k = 0; k < group.states().size(); ++k) {
        group.states()[k] = nn::get_adam(archive, prefix + "." + std::to_string(k));
    }
}

void load_actor(const nn::Archive& archive, const std::string& name, ActorNetwork& actor) {
    nn::DenseNet net = nn::get_net(archive, name);
    if (net.shapes() != actor.net.shapes()) {
        throw ConfigError("checkpoint actor does not match the configured architecture");
    }
    actor.net = std::move(net);
}

UsfShape continuous_usf_shape(const AgentConfig& config, const EnvSpec& env) {
    UsfShape shape;
    shape.state_dim = env.state_dim;
    shape.goal_dim = env.goal_dim;
    shape.action_dim = env.actions.dim;
    shape.feature_dim = config.feature_dim;
    shape.widths = kContinuousWidths;
    shape.w_hidden = {64, 64};
    return shape;
}

} // namespace

// ---- DDPG ----

DdpgAgent::DdpgAgent(const AgentConfig& config, const EnvSpec& env, std::uint64_t seed)
    : Agent(config),
      actor_(env.state_dim, env.goal_dim, env.actions.dim, env.actions.high, kActorHidden, derive_seed(seed, 10)),
      actor_target_(actor_),
      critic_(env.state_dim, env.goal_dim, 0, env.actions.dim, kContinuousWidths, derive_seed(seed, 11)),
      critic_target_(critic_),
      actor_optimizer_({&actor_.net}),
      critic_optimizer_(std::as_const(critic_).nets()) {
    require_continuous(env);
    schedule_.mode = TargetSchedule::Mode::polyak;
    schedule_.tau = config.tau;
}

Action DdpgAgent::act(const Eigen::VectorXd& s, const Eigen::VectorXd& g, Rng& rng) const {
    return ddpg_action(actor_, s, g, config_.noise_fraction * actor_.bound(), rng);
}

Action DdpgAgent::greedy(const Eigen::VectorXd& s, const Eigen::VectorXd& g) const {
    return Eigen::VectorXd(actor_.forward(to_matrix(s), to_matrix(g)).col(0));
}

LossReport DdpgAgent::update(const replay::Batch& batch) {
    const BatchMatrices b = to_matrices(batch);
    const Eigen::MatrixXd next_actions = actor_target_.forward(b.s_next, b.g);
    const Eigen::VectorXd y = dqn_target(critic_target_, b, &next_actions);
    std::vector<Eigen::VectorXd> grads;
    const LossReport report = dqn_loss(critic_, b, y, &grads);
    critic_optimizer_.step(critic_.nets(), grads, config_.critic_lr, config_.clip_norm);

    std::vector<Eigen::VectorXd> actor_grads(1);
    actor_loss(actor_, critic_, b.s, b.g, &actor_grads[0]);
    actor_optimizer_.step({&actor_.net}, actor_grads, config_.actor_lr, config_.clip_norm);

    std::vector<nn::DenseNet*> targets = critic_target_.nets();
    std::vector<const nn::DenseNet*> online = std::as_const(critic_).nets();
    targets.push_back(&actor_target_.net);
    online.push_back(&actor_.net);
    schedule_.after_update(targets, online);
    return report;
}

void DdpgAgent::save(nn::Archive& archive) const {
    archive.put_text("agent.kind", to_string(kind()));
    archive.put_int("agent.updates", schedule_.updates);
    nn::put_net(archive, "actor", actor_.net);
    nn::put_net(archive, "actor_target", actor_target_.net);
    critic_.save(archive, "online");
    critic_target_.save(archive, "target");
    save_group(archive, "adam_actor", actor_optimizer_);
    save_group(archive, "adam", critic_optimizer_);
}

void DdpgAgent::load(const nn::Archive& archive) {
    load_actor(archive, "actor", actor_);
    load_actor(archive, "actor_target", actor_target_);
    critic_.load(archive, "online");
    critic_target_.load(archive, "target");
    load_group(archive, "adam_actor", actor_optimizer_);
    load_group(archive, "adam", critic_optimizer_);
    schedule_.updates = archive.integer("agent.updates");
}

// ---- USF-DDPG ----

UsfDdpgAgent::UsfDdpgAgent(const AgentConfig& config, const EnvSpec& env, std::uint64_t seed)
    : Agent(config),
      actor_(env.state_dim, env.goal_dim, env.actions.dim, env.actions.high, kActorHidden, derive_seed(seed, 10)),
      actor_target_(actor_),
      critic_(continuous_usf_shape(config, env), derive_seed(seed, 11)),
      critic_target_(critic_),
      actor_optimizer_({&actor_.net}),
      critic_optimizer_(std::as_const(critic_).nets()) {
    require_continuous(env);
    schedule_.mode = TargetSchedule::Mode::polyak;
    schedule_.tau = config.tau;
}

Action UsfDdpgAgent::act(const Eigen::VectorXd& s, const Eigen::VectorXd& g, Rng& rng) const {
    return ddpg_action(actor_, s, g, config_.noise_fraction * actor_.bound(), rng);
}

Action UsfDdpgAgent::greedy(const Eigen::VectorXd& s, const Eigen::VectorXd& g) const {
    return Eigen::VectorXd(actor_.forward(to_matrix(s), to_matrix(g)).col(0));
}

LossReport UsfDdpgAgent::update(const replay::Batch& batch) {
    const BatchMatrices b = to_matrices(batch);
    const Eigen::MatrixXd next_actions = actor_target_.forward(b.s_next, b.g);
    const UsfTargets targets = usf_targets(critic_target_, b, &next_actions);
    std::vector<Eigen::VectorXd> grads;
    const LossReport report = usf_loss(critic_, b, targets, config_.lambda, &grads);
    critic_optimizer_.step(critic_.nets(), grads, config_.critic_lr, config_.clip_norm);

    std::vector<Eigen::VectorXd> actor_grads(1);
    actor_loss(actor_, critic_, b.s, b.g, &actor_grads[0]);
    actor_optimizer_.step({&actor_.net}, actor_grads, config_.actor_lr, config_.clip_norm);

    std::vector<nn::DenseNet*> targets_nets = critic_target_.nets();
    std::vector<const nn::DenseNet*> online = std::as_const(critic_).nets();
    targets_nets.push_back(&actor_target_.net);
    online.push_back(&actor_.net);
    schedule_.after_update(targets_nets, online);
    return report;
}

void UsfDdpgAgent::save(nn::Archive& archive) const {
    archive.put_text("agent.kind", to_string(kind()));
    archive.put_text("agent.phi_mode", to_string(critic_.shape().mode));
    archive.put_int("agent.updates", schedule_.updates);
    nn::put_net(archive, "actor", actor_.net);
    nn::put_net(archive, "actor_target", actor_target_.net);
    critic_.save(archive, "online");
    critic_target_.save(archive, "target");
    save_group(archive, "adam_actor", actor_optimizer_);
    save_group(archive, "adam", critic_optimizer_);
}

void UsfDdpgAgent::load(const nn::Archive& archive) {
    load_actor(archive, "actor", actor_);
    load_actor(archive, "actor_target", actor_target_);
    critic_.load(archive, "online");
    critic_target_.load(archive, "target");
    load_group(archive, "adam_actor", actor_optimizer_);
    load_group(archive, "adam", critic_optimizer_);
    schedule_.updates = archive.integer("agent.updates");
}

} // namespace usf::agents
