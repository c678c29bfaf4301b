#include "usf/oracle/tabular.hpp"

#include <cmath>
#include <deque>
#include <limits>

#include <Eigen/Dense>

#include "usf/core/error.hpp"

namespace usf::oracle {

void TabularMdp::validate() const {
    const std::size_t n = state_count * action_count;
    if (state_count == 0 || action_count == 0) {
        throw ConfigError("MDP needs at least one state and one action");
    }
    if (next.size() != n || reward.size() != n || gamma.size() != n) {
        throw ConfigError("MDP tables must have state_count * action_count entries");
    }
    if (goal >= state_count) {
        throw ConfigError("MDP goal index out of range");
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (next[i] >= state_count) {
            throw ConfigError("MDP successor out of range");
        }
        if (!(gamma[i] >= 0.0 && gamma[i] <= 1.0)) {
            throw ConfigError("MDP pseudo-discount outside [0, 1]");
        }
    }
    for (std::size_t a = 0; a < action_count; ++a) {
        if (next[at(goal, a)] != goal) {
            throw ConfigError("MDP goal must be absorbing");
        }
    }
}

TabularMdp grid_mdp(const envs::GridWorld& env, envs::Cell goal, envs::RewardStructure structure) {
    const envs::GridLayout& layout = env.layout();
    TabularMdp mdp;
    mdp.state_count = layout.cell_count();
    mdp.action_count = envs::kMoveCount;
    mdp.goal = layout.index_checked(goal);
    const std::size_t n = mdp.state_count * mdp.action_count;
    mdp.next.resize(n);
    mdp.reward.resize(n);
    mdp.gamma.resize(n);
    for (std::size_t s = 0; s < mdp.state_count; ++s) {
        const envs::Cell cell = layout.cells()[s];
        for (std::size_t a = 0; a < mdp.action_count; ++a) {
            const std::size_t i = mdp.at(s, a);
            if (s == mdp.goal) {
                mdp.next[i] = s;
                mdp.reward[i] = 0.0;
                mdp.gamma[i] = 0.0;
                continue;
            }
            const envs::Cell landed = layout.move(cell, a);
            mdp.next[i] = layout.index_checked(landed);
            mdp.reward[i] = env.reward(landed, goal, structure);
            mdp.gamma[i] = landed == goal ? 0.0 : env.config().gamma;
        }
    }
    return mdp;
}

TabularMdp with_feature_rewards(const TabularMdp& mdp, const Eigen::MatrixXd& phi, const Eigen::VectorXd& w) {
    if (phi.rows() != static_cast<Eigen::Index>(mdp.state_count) || phi.cols() != w.size()) {
        throw ConfigError("feature matrix must be state_count x d and w length d");
    }
    TabularMdp out = mdp;
    for (std::size_t i = 0; i < out.next.size(); ++i) {
        out.reward[i] = phi.row(static_cast<Eigen::Index>(out.next[i])).dot(w);
    }
    return out;
}

Eigen::MatrixXd value_iteration(const TabularMdp& mdp, double tol, std::vector<double>* residuals) {
    mdp.validate();
    if (!(tol > 0.0)) {
        throw ConfigError("value iteration tolerance must be positive");
    }
    const auto n = static_cast<Eigen::Index>(mdp.state_count);
    const auto na = static_cast<Eigen::Index>(mdp.action_count);
    Eigen::MatrixXd q = Eigen::MatrixXd::Zero(n, na);
    Eigen::VectorXd v = Eigen::VectorXd::Zero(n);
    for (int sweep = 0; sweep < 1000000; ++sweep) {
        Eigen::MatrixXd updated(n, na);
        for (Eigen::Index s = 0; s < n; ++s) {
            for (Eigen::Index a = 0; a < na; ++a) {
                const std::size_t i = mdp.at(static_cast<std::size_t>(s), static_cast<std::size_t>(a));
                updated(s, a) = mdp.reward[i] + mdp.gamma[i] * v[static_cast<Eigen::Index>(mdp.next[i])];
            }
        }
        const double change = (updated - q).cwiseAbs().maxCoeff();
        q = std::move(updated);
        v = q.rowwise().maxCoeff();
        if (residuals != nullptr) {
            residuals->push_back(change);
        }
        if (change < tol) {
            return q;
        }
    }
    throw NumericError("value iteration did not converge");
}

std::vector<std::size_t> greedy_policy(const Eigen::MatrixXd& q) {
    std::vector<std::size_t> policy(static_cast<std::size_t>(q.rows()), 0);
    for (Eigen::Index s = 0; s < q.rows(); ++s) {
        Eigen::Index best = 0;
        for (Eigen::Index a = 1; a < q.cols(); ++a) {
            if (q(s, a) > q(s, best)) {
                best = a;
            }
        }
        policy[static_cast<std::size_t>(s)] = static_cast<std::size_t>(best);
    }
    return policy;
}

namespace {

void check_policy(const TabularMdp& mdp, const std::vector<std::size_t>& policy) {
    if (policy.size() != mdp.state_count) {
        throw ConfigError("policy must give an action for every state");
    }
    for (std::size_t a : policy) {
        if (a >= mdp.action_count) {
            throw ConfigError("policy action out of range");
        }
    }
}

// I - Gamma_pi P_pi for the policy-induced chain.
Eigen::MatrixXd chain_system(const TabularMdp& mdp, const std::vector<std::size_t>& policy) {
    const auto n = static_cast<Eigen::Index>(mdp.state_count);
    Eigen::MatrixXd a = Eigen::MatrixXd::Identity(n, n);
    for (std::size_t s = 0; s < mdp.state_count; ++s) {
        const std::size_t i = mdp.at(s, policy[s]);
        a(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(mdp.next[i])) -= mdp.gamma[i];
    }
    return a;
}

Eigen::MatrixXd solve_chain(const TabularMdp& mdp, const std::vector<std::size_t>& policy, const Eigen::MatrixXd& rhs) {
    const Eigen::FullPivLU<Eigen::MatrixXd> lu(chain_system(mdp, policy));
    if (!lu.isInvertible()) {
        throw NumericError("policy evaluation system is singular (undiscounted cycle)");
    }
    return lu.solve(rhs);
}

} // namespace

Eigen::MatrixXd policy_evaluation(const TabularMdp& mdp, const std::vector<std::size_t>& policy) {
    mdp.validate();
    check_policy(mdp, policy);
    const auto n = static_cast<Eigen::Index>(mdp.state_count);
    Eigen::VectorXd r_pi(n);
    for (std::size_t s = 0; s < mdp.state_count; ++s) {
        r_pi[static_cast<Eigen::Index>(s)] = mdp.reward[mdp.at(s, policy[s])];
    }
    const Eigen::VectorXd v = solve_chain(mdp, policy, r_pi);
    Eigen::MatrixXd q(n, static_cast<Eigen::Index>(mdp.action_count));
    for (std::size_t s = 0; s < mdp.state_count; ++s) {
        for (std::size_t a = 0; a < mdp.action_count; ++a) {
            const std::size_t i = mdp.at(s, a);
            q(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(a)) =
                mdp.reward[i] + mdp.gamma[i] * v[static_cast<Eigen::Index>(mdp.next[i])];
        }
    }
    return q;
}

Eigen::MatrixXd tabular_sr(const TabularMdp& mdp, const std::vector<std::size_t>& policy, const Eigen::MatrixXd& phi) {
    mdp.validate();
    check_policy(mdp, policy);
    const auto n = static_cast<Eigen::Index>(mdp.state_count);
    if (phi.rows() != n) {
        throw ConfigError("feature matrix needs one row per state");
    }
    const Eigen::Index d = phi.cols();
    // m(s) = psi(s, pi(s)) satisfies m = phi_next + Gamma_pi P_pi m
    Eigen::MatrixXd phi_next(n, d);
    for (std::size_t s = 0; s < mdp.state_count; ++s) {
        phi_next.row(static_cast<Eigen::Index>(s)) = phi.row(static_cast<Eigen::Index>(mdp.next[mdp.at(s, policy[s])]));
    }
    constexpr double kTol = 1e-10;
    Eigen::MatrixXd m;
    if (static_cast<double>(n) * static_cast<double>(d) <= 1e5) {
        m = solve_chain(mdp, policy, phi_next);
    } else {
        m = phi_next;
        bool converged = false;
        for (int it = 0; it < 100000 && !converged; ++it) {
            Eigen::MatrixXd updated = phi_next;
            for (std::size_t s = 0; s < mdp.state_count; ++s) {
                const std::size_t i = mdp.at(s, policy[s]);
                updated.row(static_cast<Eigen::Index>(s)) += mdp.gamma[i] * m.row(static_cast<Eigen::Index>(mdp.next[i]));
            }
            converged = (updated - m).cwiseAbs().maxCoeff() < kTol;
            m = std::move(updated);
            if (!m.allFinite()) {
                break;
            }
        }
        if (!converged) {
            throw NumericError("successor features did not converge (undiscounted cycle)");
        }
    }
    Eigen::MatrixXd psi(n * static_cast<Eigen::Index>(mdp.action_count), d);
    for (std::size_t s = 0; s < mdp.state_count; ++s) {
        for (std::size_t a = 0; a < mdp.action_count; ++a) {
            const std::size_t i = mdp.at(s, a);
            const auto s_next = static_cast<Eigen::Index>(mdp.next[i]);
            psi.row(static_cast<Eigen::Index>(i)) = phi.row(s_next) + mdp.gamma[i] * m.row(s_next);
        }
    }
    return psi;
}

int shortest_steps(const envs::GridLayout& layout, envs::Cell from, envs::Cell to) {
    const std::size_t start = layout.index_checked(from);
    const std::size_t target = layout.index_checked(to);
    std::vector<int> dist(layout.cell_count(), -1);
    std::deque<std::size_t> frontier{start};
    dist[start] = 0;
    while (!frontier.empty()) {
        const std::size_t i = frontier.front();
        frontier.pop_front();
        if (i == target) {
            return dist[i];
        }
        for (std::size_t a = 0; a < envs::kMoveCount; ++a) {
            const std::size_t j = layout.index_checked(layout.move(layout.cells()[i], a));
            if (dist[j] < 0) {
                dist[j] = dist[i] + 1;
                frontier.push_back(j);
            }
        }
    }
    throw ConfigError(to_string(to) + " is unreachable from " + to_string(from));
}

int rollout_steps(const TabularMdp& mdp, const std::vector<std::size_t>& policy, std::size_t from, int limit) {
    check_policy(mdp, policy);
    std::size_t s = from;
    for (int step = 0; step < limit; ++step) {
        if (s == mdp.goal) {
            return step;
        }
        s = mdp.next[mdp.at(s, policy[s])];
    }
    return s == mdp.goal ? limit : -1;
}

} // namespace usf::oracle
