#include "usf/harness/verification.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "usf/agents/agent.hpp"
#include "usf/agents/losses.hpp"
#include "usf/agents/tabular_sr.hpp"
#include "usf/core/random.hpp"
#include "usf/envs/grid_world.hpp"
#include "usf/nn/grad_check.hpp"
#include "usf/oracle/tabular.hpp"
#include "usf/replay/her.hpp"
#include "usf/replay/replay_store.hpp"

namespace usf::harness {

namespace {

using agents::BatchMatrices;

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(3);
    os << v;
    return os.str();
}

BatchMatrices random_batch(Rng& rng, std::size_t b, std::size_t sd, std::size_t gd, std::size_t action_count,
                           std::size_t action_dim) {
    BatchMatrices m;
    const auto n = static_cast<Eigen::Index>(b);
    auto fill = [&](std::size_t rows, double lo, double hi) {
        Eigen::MatrixXd x(static_cast<Eigen::Index>(rows), n);
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            x.data()[i] = uniform(rng, lo, hi);
        }
        return x;
    };
    m.s = fill(sd, 0.0, 1.0);
    m.g = fill(gd, 0.0, 1.0);
    m.s_next = fill(sd, 0.0, 1.0);
    m.r = fill(1, -1.0, 0.0).row(0).transpose();
    m.gamma.resize(n);
    for (Eigen::Index j = 0; j < n; ++j) {
        m.gamma[j] = bernoulli(rng, 0.3) ? 0.0 : 0.99;
    }
    if (action_count > 0) {
        for (std::size_t j = 0; j < b; ++j) {
            m.actions.push_back(uniform_index(rng, action_count));
        }
    } else {
        m.a = fill(action_dim, -1.0, 1.0);
    }
    return m;
}

agents::UsfShape tiny_usf_shape(std::size_t action_count, std::size_t action_dim, agents::PhiMode mode) {
    agents::UsfShape shape;
    shape.state_dim = 3;
    shape.goal_dim = 2;
    shape.action_count = action_count;
    shape.action_dim = action_dim;
    shape.mode = mode;
    shape.feature_dim = 4;
    shape.widths = agents::TowerWidths{{6}, 5, {7}};
    shape.w_hidden = {6, 6};
    return shape;
}

// Fixed smooth features standing in for the one-hot map in gradient checks.
Eigen::VectorXd fixed_features(const Eigen::VectorXd& s) {
    Eigen::VectorXd phi(5);
    phi << s[0], s[1], s[2], s[0] * s[1], 1.0;
    return phi;
}

constexpr double kStep = 1e-5;

// Moves freshly initialized nets to a generic parameter point: zero biases
// behind dead units otherwise leave pre-activations exactly on the ReLU kink.
void jitter(const std::vector<nn::DenseNet*>& nets, Rng& rng) {
    for (nn::DenseNet* net : nets) {
        Eigen::VectorXd& p = net->parameters();
        for (Eigen::Index i = 0; i < p.size(); ++i) {
            p[i] += 0.1 * standard_normal(rng);
        }
    }
}

} // namespace

CheckResult check_gradients(std::uint64_t seed, int points, double tolerance) {
    CheckResult result;
    result.name = "gradient check";
    double worst = 0.0;
    std::string worst_name;
    auto note = [&](const std::string& name, double err) {
        if (err > worst || worst_name.empty()) {
            worst = std::max(worst, err);
            worst_name = name;
        }
    };
    const std::size_t b = 5;
    for (int p = 0; p < points; ++p) {
        const std::uint64_t s = derive_seed(seed, static_cast<std::uint64_t>(p));
        Rng rng(s);

        // USF loss, finite actions, learned and one-hot phi, both objectives.
        for (agents::PhiMode mode : {agents::PhiMode::learned, agents::PhiMode::one_hot}) {
            const agents::FeatureFn feats = mode == agents::PhiMode::one_hot ? agents::FeatureFn(fixed_features)
                                                                             : agents::FeatureFn();
            const std::size_t fdim = mode == agents::PhiMode::one_hot ? 5 : 0;
            agents::UsfNetwork net(tiny_usf_shape(3, 0, mode), derive_seed(s, 1), feats, fdim);
            jitter(net.nets(), rng);
            const agents::UsfNetwork target(tiny_usf_shape(3, 0, mode), derive_seed(s, 2), feats, fdim);
            const BatchMatrices batch = random_batch(rng, b, 3, 2, 3, 0);
            const agents::UsfTargets targets = agents::usf_targets(target, batch);
            for (agents::UsfObjective objective : {agents::UsfObjective::q_loss, agents::UsfObjective::reward_loss}) {
                const double err = nn::grad_check(
                    net.nets(),
                    [&](std::vector<Eigen::VectorXd>* g) {
                        return agents::usf_loss(net, batch, targets, 0.3, g, objective).loss;
                    },
                    kStep);
                note(std::string("usf loss (") + agents::to_string(mode) +
                         (objective == agents::UsfObjective::q_loss ? ", Q)" : ", reward)"),
                     err);
            }
            note("reward loss",
                 nn::grad_check(
                     net.nets(), [&](std::vector<Eigen::VectorXd>* g) { return agents::reward_loss(net, batch, g); },
                     kStep));
        }

        // USF loss, continuous actions, and the actor objective through it.
        {
            agents::UsfNetwork net(tiny_usf_shape(0, 2, agents::PhiMode::learned), derive_seed(s, 3));
            jitter(net.nets(), rng);
            const agents::UsfNetwork target(tiny_usf_shape(0, 2, agents::PhiMode::learned), derive_seed(s, 4));
            const BatchMatrices batch = random_batch(rng, b, 3, 2, 0, 2);
            Eigen::MatrixXd next_a = Eigen::MatrixXd::Random(2, static_cast<Eigen::Index>(b)) * 0.9;
            const agents::UsfTargets targets = agents::usf_targets(target, batch, &next_a);
            note("usf loss (continuous)",
                 nn::grad_check(
                     net.nets(),
                     [&](std::vector<Eigen::VectorXd>* g) { return agents::usf_loss(net, batch, targets, 0.3, g).loss; },
                     kStep));
            agents::ActorNetwork actor(3, 2, 2, 1.0, {6, 6}, derive_seed(s, 5));
            jitter({&actor.net}, rng);
            note("actor objective (usf critic)",
                 nn::grad_check(
                     {&actor.net},
                     [&](std::vector<Eigen::VectorXd>* g) {
                         return agents::actor_loss(actor, net, batch.s, batch.g, g ? &(*g)[0] : nullptr);
                     },
                     kStep));
        }

        // DQN loss, finite and continuous, and the actor objective through a Q critic.
        {
            const agents::TowerWidths widths{{6}, 5, {7}};
            agents::QNetwork net(3, 2, 3, 0, widths, derive_seed(s, 6));
            jitter(net.nets(), rng);
            const agents::QNetwork target(3, 2, 3, 0, widths, derive_seed(s, 7));
            const BatchMatrices batch = random_batch(rng, b, 3, 2, 3, 0);
            const Eigen::VectorXd y = agents::dqn_target(target, batch);
            note("dqn loss", nn::grad_check(
                                 net.nets(),
                                 [&](std::vector<Eigen::VectorXd>* g) { return agents::dqn_loss(net, batch, y, g).loss; },
                                 kStep));

            agents::QNetwork critic(3, 2, 0, 2, widths, derive_seed(s, 8));
            jitter(critic.nets(), rng);
            const agents::QNetwork critic_target(3, 2, 0, 2, widths, derive_seed(s, 9));
            const BatchMatrices cbatch = random_batch(rng, b, 3, 2, 0, 2);
            Eigen::MatrixXd next_a = Eigen::MatrixXd::Random(2, static_cast<Eigen::Index>(b)) * 0.9;
            const Eigen::VectorXd cy = agents::dqn_target(critic_target, cbatch, &next_a);
            note("dqn loss (continuous)",
                 nn::grad_check(
                     critic.nets(),
                     [&](std::vector<Eigen::VectorXd>* g) { return agents::dqn_loss(critic, cbatch, cy, g).loss; },
                     kStep));
            agents::ActorNetwork actor(3, 2, 2, 1.0, {6, 6}, derive_seed(s, 10));
            jitter({&actor.net}, rng);
            note("actor objective (Q critic)",
                 nn::grad_check(
                     {&actor.net},
                     [&](std::vector<Eigen::VectorXd>* g) {
                         return agents::actor_loss(actor, critic, cbatch.s, cbatch.g, g ? &(*g)[0] : nullptr);
                     },
                     kStep));
        }
    }
    result.value = worst;
    result.passed = worst < tolerance;
    result.detail = "max relative error " + fmt(worst) + " (" + worst_name + ") over " + std::to_string(points) +
                    " points, threshold " + fmt(tolerance);
    return result;
}

CheckResult check_factorization(std::uint64_t seed, int pairs, double tolerance) {
    CheckResult result;
    result.name = "factorization identity";
    Rng rng(seed);
    const envs::GridWorld env(envs::GridLayout::open(5, 5), envs::GridConfig{}, seed);
    const std::size_t n = env.layout().cell_count();
    const Eigen::MatrixXd phi = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    double worst = 0.0;
    for (int p = 0; p < pairs; ++p) {
        const envs::Cell goal = env.layout().cells()[uniform_index(rng, n)];
        const oracle::TabularMdp base = oracle::grid_mdp(env, goal, envs::RewardStructure::constant);
        Eigen::VectorXd w(static_cast<Eigen::Index>(n));
        for (Eigen::Index i = 0; i < w.size(); ++i) {
            w[i] = uniform(rng, -1.0, 0.0);
        }
        const oracle::TabularMdp mdp = oracle::with_feature_rewards(base, phi, w);
        std::vector<std::size_t> policy(n);
        if (p % 2 == 0) {
            policy = oracle::greedy_policy(oracle::value_iteration(mdp, 1e-12));
        } else {
            for (auto& a : policy) {
                a = uniform_index(rng, envs::kMoveCount);
            }
        }
        const Eigen::MatrixXd q = oracle::policy_evaluation(mdp, policy);
        const Eigen::MatrixXd psi = oracle::tabular_sr(mdp, policy, phi);
        const Eigen::VectorXd psi_w = psi * w;
        for (std::size_t s = 0; s < n; ++s) {
            for (std::size_t a = 0; a < envs::kMoveCount; ++a) {
                worst = std::max(worst, std::abs(q(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(a)) -
                                                 psi_w[static_cast<Eigen::Index>(mdp.at(s, a))]));
            }
        }
    }
    result.value = worst;
    result.passed = worst < tolerance;
    result.detail = "max |Q - Psi w| = " + fmt(worst) + " over " + std::to_string(pairs) + " goal/weight pairs";
    return result;
}

CheckResult check_td_successor_features(std::uint64_t seed, int updates, double learning_rate, double tolerance) {
    CheckResult result;
    result.name = "TD successor features";
    Rng rng(seed);
    const envs::GridWorld env(envs::GridLayout::open(5, 5), envs::GridConfig{}, seed);
    const envs::Cell goal{5, 5};
    const oracle::TabularMdp mdp = oracle::grid_mdp(env, goal, envs::RewardStructure::constant);
    const std::vector<std::size_t> policy = oracle::greedy_policy(oracle::value_iteration(mdp, 1e-12));
    const auto n = static_cast<Eigen::Index>(mdp.state_count);
    const Eigen::MatrixXd phi = Eigen::MatrixXd::Identity(n, n);
    const Eigen::MatrixXd exact = oracle::tabular_sr(mdp, policy, phi);
    agents::TabularSrLearner learner(mdp.state_count, mdp.action_count, phi, policy);
    for (int u = 0; u < updates; ++u) {
        const std::size_t s = uniform_index(rng, mdp.state_count);
        const std::size_t a = uniform_index(rng, mdp.action_count);
        const std::size_t i = mdp.at(s, a);
        learner.update(s, a, mdp.next[i], mdp.gamma[i], learning_rate);
    }
    const double err = (learner.psi() - exact).cwiseAbs().maxCoeff();
    result.value = err;
    result.passed = err < tolerance;
    result.detail = "L-inf distance " + fmt(err) + " after " + std::to_string(updates) + " updates (lr " +
                    fmt(learning_rate) + "), threshold " + fmt(tolerance);
    return result;
}

CheckResult check_value_iteration_paths(std::uint64_t seed, int goals) {
    CheckResult result;
    result.name = "value iteration vs BFS";
    Rng rng(seed);
    const envs::GridWorld env(envs::GridLayout::four_rooms(), envs::GridConfig{}, seed);
    const auto& layout = env.layout();
    int mismatches = 0;
    int checked = 0;
    for (int k = 0; k < goals; ++k) {
        const envs::Cell goal = layout.cells()[uniform_index(rng, layout.cell_count())];
        const oracle::TabularMdp mdp = oracle::grid_mdp(env, goal, envs::RewardStructure::constant);
        const auto policy = oracle::greedy_policy(oracle::value_iteration(mdp, 1e-12));
        for (std::size_t s = 0; s < layout.cell_count(); ++s) {
            const int bfs = oracle::shortest_steps(layout, layout.cells()[s], goal);
            const int greedy = oracle::rollout_steps(mdp, policy, s, 1000);
            mismatches += greedy == bfs ? 0 : 1;
            ++checked;
        }
    }
    result.value = mismatches;
    result.passed = mismatches == 0;
    result.detail = std::to_string(mismatches) + " mismatches over " + std::to_string(checked) + " (cell, goal) pairs";
    return result;
}

CheckResult check_dual_store_fraction(std::uint64_t seed, int draws) {
    CheckResult result;
    result.name = "dual store fraction";
    Rng rng(seed);
    replay::DualStore dual(100);
    auto item = [](double r) {
        replay::Transition t;
        t.g = t.s = t.s_next = Eigen::VectorXd::Zero(2);
        t.a = std::size_t{0};
        t.r = r;
        return t;
    };
    for (int i = 0; i < 10; ++i) {
        dual.store(item(1.0));
    }
    dual.retire();
    for (int i = 0; i < 30; ++i) {
        dual.store(item(2.0));
    }
    long old_count = 0;
    for (const replay::Transition* t : dual.draw(static_cast<std::size_t>(draws), rng)) {
        old_count += t->r == 1.0 ? 1 : 0;
    }
    const double fraction = static_cast<double>(old_count) / draws;
    result.value = fraction;
    result.passed = fraction >= 0.49 && fraction <= 0.51;
    result.detail = "old-store fraction " + fmt(fraction) + " over " + std::to_string(draws) + " draws";
    return result;
}

CheckResult check_her_consistency(std::uint64_t seed, int count) {
    CheckResult result;
    result.name = "HER reward consistency";
    Rng rng(seed);
    envs::GridConfig grid;
    grid.structure = envs::RewardStructure::mixed;
    envs::GridWorld env(envs::GridLayout::four_rooms(), grid, derive_seed(seed, 1));
    const auto& cells = env.layout().cells();
    const replay::RewardFn reward_fn = [&env](const Eigen::VectorXd& s, const Action& a, const Eigen::VectorXd& sn,
                                              const Eigen::VectorXd& g) { return env.reward_fn(s, a, sn, g); };
    const replay::AchievedGoalFn achieved = [&env](const Eigen::VectorXd& s) { return env.achieved_goal(s); };
    int produced = 0;
    int mismatches = 0;
    int reached = 0;
    while (produced < count) {
        envs::Cell goal = cells[uniform_index(rng, cells.size())];
        while (goal == env.layout().start()) {
            goal = cells[uniform_index(rng, cells.size())];
        }
        Eigen::VectorXd s = env.reset(goal);
        const Eigen::VectorXd g = env.encode(goal);
        std::vector<replay::Transition> episode;
        bool done = false;
        while (!done) {
            const std::size_t a = uniform_index(rng, envs::kMoveCount);
            const envs::StepResult step = env.step(a);
            episode.push_back({g, s, a, step.next_state, step.reward, step.gamma});
            s = step.next_state;
            done = step.done;
        }
        for (const replay::Transition& t : replay::her_relabel(episode, 30, reward_fn, achieved, rng)) {
            const envs::RewardOutcome o = env.reward_fn(t.s, t.a, t.s_next, t.g);
            mismatches += (o.reward != t.r || o.gamma != t.gamma) ? 1 : 0;
            reached += t.gamma == 0.0 ? 1 : 0;
            if (++produced == count) {
                break;
            }
        }
    }
    result.value = mismatches;
    result.passed = mismatches == 0;
    result.detail = std::to_string(mismatches) + " mismatches in " + std::to_string(produced) +
                    " relabelled transitions (" + std::to_string(reached) + " goal-reaching)";
    return result;
}

std::vector<CheckResult> run_verification_suite(std::uint64_t seed) {
    return {check_gradients(seed),
            check_factorization(seed),
            check_td_successor_features(seed),
            check_value_iteration_paths(seed),
            check_dual_store_fraction(seed),
            check_her_consistency(seed)};
}

} // namespace usf::harness
