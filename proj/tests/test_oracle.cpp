#include <doctest.h>

#include <cmath>

#include "usf/agents/tabular_sr.hpp"
#include "usf/core/error.hpp"
#include "usf/core/random.hpp"
#include "usf/harness/verification.hpp"
#include "usf/oracle/tabular.hpp"

using namespace usf;
using namespace usf::oracle;
using envs::Cell;
using envs::GridLayout;
using envs::GridWorld;

namespace {

GridWorld corridor(int length) {
    std::string row = "#S";
    row += std::string(static_cast<std::size_t>(length - 1), '.');
    row += "#";
    const std::string wall(row.size(), '#');
    return GridWorld(GridLayout::parse(wall + "\n" + row + "\n" + wall + "\n"), envs::GridConfig{}, 0);
}

Eigen::MatrixXd identity(std::size_t n) {
    return Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
}

constexpr std::size_t kRight = static_cast<std::size_t>(envs::Move::right);

} // namespace

TEST_CASE("value iteration on a three-cell corridor") {
    const GridWorld env = corridor(3);
    const TabularMdp mdp = grid_mdp(env, Cell{3, 1}, envs::RewardStructure::constant);
    const Eigen::MatrixXd q = value_iteration(mdp, 1e-12);
    const auto left = env.layout().index_checked(Cell{1, 1});
    const auto middle = env.layout().index_checked(Cell{2, 1});
    CHECK(q.row(static_cast<Eigen::Index>(middle)).maxCoeff() == doctest::Approx(0.0));
    CHECK(q.row(static_cast<Eigen::Index>(left)).maxCoeff() == doctest::Approx(-0.1));
    CHECK(q.row(static_cast<Eigen::Index>(mdp.goal)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("goal value is zero under both resolved structures") {
    const GridWorld env(GridLayout::four_rooms(), envs::GridConfig{}, 0);
    for (auto structure : {envs::RewardStructure::constant, envs::RewardStructure::room}) {
        const TabularMdp mdp = grid_mdp(env, Cell{9, 10}, structure);
        const Eigen::MatrixXd q = value_iteration(mdp, 1e-12);
        CHECK(q.row(static_cast<Eigen::Index>(mdp.goal)).cwiseAbs().maxCoeff() == 0.0);
        CHECK(q.maxCoeff() <= 0.0);
    }
}

TEST_CASE("value iteration contracts by at least gamma per sweep") {
    const GridWorld env(GridLayout::four_rooms(), envs::GridConfig{}, 0);
    const TabularMdp mdp = grid_mdp(env, Cell{10, 10}, envs::RewardStructure::room);
    std::vector<double> residuals;
    value_iteration(mdp, 1e-12, &residuals);
    REQUIRE(residuals.size() > 2);
    for (std::size_t k = 1; k < residuals.size(); ++k) {
        CHECK(residuals[k] <= 0.99 * residuals[k - 1] + 1e-15);
    }
}

TEST_CASE("greedy value-iteration paths are BFS-shortest from every cell") {
    const auto r = harness::check_value_iteration_paths(3, 8);
    CHECK(r.passed);
    CHECK(r.value == 0.0);
}

TEST_CASE("shortest_steps basics") {
    const GridLayout open = GridLayout::open(5, 5);
    CHECK(shortest_steps(open, Cell{2, 2}, Cell{2, 2}) == 0);
    CHECK(shortest_steps(open, Cell{2, 2}, Cell{3, 2}) == 1);
    CHECK(shortest_steps(open, Cell{1, 1}, Cell{5, 5}) == 8);
    const GridLayout rooms = GridLayout::four_rooms();
    // around the wall through the top doorway
    CHECK(shortest_steps(rooms, Cell{5, 1}, Cell{7, 1}) == 6);
    CHECK_THROWS_AS(shortest_steps(rooms, Cell{1, 1}, Cell{6, 1}), ConfigError);
}

TEST_CASE("successor features of terminal and two-step transitions") {
    const GridWorld env = corridor(3);
    const TabularMdp mdp = grid_mdp(env, Cell{3, 1}, envs::RewardStructure::constant);
    const std::vector<std::size_t> policy(mdp.state_count, kRight);
    const Eigen::MatrixXd psi = tabular_sr(mdp, policy, identity(mdp.state_count));
    const auto s0 = env.layout().index_checked(Cell{1, 1});
    const auto s1 = env.layout().index_checked(Cell{2, 1});
    const auto goal = mdp.goal;
    Eigen::VectorXd direct = Eigen::VectorXd::Zero(3);
    direct[static_cast<Eigen::Index>(goal)] = 1.0;
    CHECK((psi.row(static_cast<Eigen::Index>(mdp.at(s1, kRight))).transpose() - direct).cwiseAbs().maxCoeff() < 1e-12);
    Eigen::VectorXd two = Eigen::VectorXd::Zero(3);
    two[static_cast<Eigen::Index>(s1)] = 1.0;
    two[static_cast<Eigen::Index>(goal)] = 0.99;
    CHECK((psi.row(static_cast<Eigen::Index>(mdp.at(s0, kRight))).transpose() - two).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("Psi w reproduces policy evaluation for feature rewards") {
    const auto r = harness::check_factorization(21, 10, 1e-8);
    CHECK(r.passed);
    MESSAGE(r.detail);
}

TEST_CASE("fixpoint and dense solves agree") {
    // 104 cells * 104 features = 10816 entries: dense path; a wide feature
    // matrix (1000 columns) forces the fixpoint path.
    const GridWorld env(GridLayout::four_rooms(), envs::GridConfig{}, 0);
    const TabularMdp mdp = grid_mdp(env, Cell{10, 3}, envs::RewardStructure::constant);
    const auto policy = greedy_policy(value_iteration(mdp, 1e-12));
    Rng rng(1);
    Eigen::MatrixXd wide(static_cast<Eigen::Index>(mdp.state_count), 1000);
    for (Eigen::Index i = 0; i < wide.size(); ++i) {
        wide.data()[i] = uniform(rng, -1, 1);
    }
    const Eigen::MatrixXd iterative = tabular_sr(mdp, policy, wide);
    const Eigen::MatrixXd narrow = tabular_sr(mdp, policy, wide.leftCols(10));
    CHECK((iterative.leftCols(10) - narrow).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("singular systems and malformed MDPs are rejected") {
    TabularMdp mdp;
    mdp.state_count = 2;
    mdp.action_count = 1;
    mdp.next = {0, 1};
    mdp.reward = {-1.0, 0.0};
    mdp.gamma = {1.0, 0.0};
    mdp.goal = 1;
    CHECK_NOTHROW(mdp.validate());
    CHECK_THROWS_AS(policy_evaluation(mdp, {0, 0}), NumericError);
    CHECK_THROWS_AS(tabular_sr(mdp, {0, 0}, identity(2)), NumericError);

    TabularMdp leaky = mdp;
    leaky.next = {1, 0};
    CHECK_THROWS_AS(leaky.validate(), ConfigError);
}

TEST_CASE("greedy policy ties go to the lowest action") {
    Eigen::MatrixXd q(2, 3);
    q << 0.1, 0.5, 0.5, -1, -1, -1;
    const auto pi = greedy_policy(q);
    CHECK(pi[0] == 1);
    CHECK(pi[1] == 0);
}

TEST_CASE("rollout_steps reports -1 for policies that never arrive") {
    const GridWorld env = corridor(3);
    const TabularMdp mdp = grid_mdp(env, Cell{3, 1}, envs::RewardStructure::constant);
    const std::vector<std::size_t> stuck(mdp.state_count, static_cast<std::size_t>(envs::Move::left));
    CHECK(rollout_steps(mdp, stuck, env.layout().index_checked(Cell{1, 1}), 50) == -1);
    const std::vector<std::size_t> right(mdp.state_count, kRight);
    CHECK(rollout_steps(mdp, right, env.layout().index_checked(Cell{1, 1}), 50) == 2);
}

TEST_CASE("TD successor features on a four-cell chain converge to the analytic table") {
    const GridWorld env = corridor(4);
    const TabularMdp mdp = grid_mdp(env, Cell{4, 1}, envs::RewardStructure::constant);
    const std::vector<std::size_t> policy(mdp.state_count, kRight);
    const Eigen::MatrixXd phi = identity(mdp.state_count);
    const Eigen::MatrixXd exact = tabular_sr(mdp, policy, phi);
    agents::TabularSrLearner learner(mdp.state_count, mdp.action_count, phi, policy);
    Rng rng(0);
    // on-policy transitions from uniformly drawn states; the state SR is
    // psi(s, pi(s))
    for (int u = 0; u < 10000; ++u) {
        const std::size_t s = uniform_index(rng, mdp.state_count);
        const std::size_t i = mdp.at(s, policy[s]);
        learner.update(s, policy[s], mdp.next[i], mdp.gamma[i], 1e-2);
    }
    double err = 0.0;
    for (std::size_t s = 0; s < mdp.state_count; ++s) {
        const auto row = static_cast<Eigen::Index>(mdp.at(s, policy[s]));
        err = std::max(err, (learner.psi().row(row) - exact.row(row)).cwiseAbs().maxCoeff());
    }
    CHECK(err < 0.05);
}

TEST_CASE("TD successor features on a 5x5 grid under the optimal policy") {
    const auto r = harness::check_td_successor_features(0);
    CHECK(r.passed);
    MESSAGE(r.detail);
}
