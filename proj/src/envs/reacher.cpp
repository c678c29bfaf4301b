#include "usf/envs/reacher.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "usf/core/error.hpp"

namespace usf::envs {

namespace {

double wrap_angle(double a) {
    a = std::remainder(a, 2.0 * M_PI);
    return a;
}

double distance(Point a, Point b) {
    return std::hypot(a.x - b.x, a.y - b.y);
}

} // namespace

KinematicReacher::KinematicReacher(ReacherConfig config) : config_(config) {
    if (config_.link1 <= 0.0 || config_.link2 <= 0.0 || config_.dt <= 0.0 || config_.threshold <= 0.0 ||
        config_.action_bound <= 0.0 || config_.max_steps < 1) {
        throw ConfigError("reacher lengths, dt, threshold, action bound and max_steps must be positive");
    }
}

Point KinematicReacher::forward_kinematics(double q1, double q2) const {
    return {config_.link1 * std::cos(q1) + config_.link2 * std::cos(q1 + q2),
            config_.link1 * std::sin(q1) + config_.link2 * std::sin(q1 + q2)};
}

Eigen::VectorXd KinematicReacher::encode_goal(Point p) const {
    Eigen::VectorXd g(2);
    g << p.x / reach(), p.y / reach();
    return g;
}

Point KinematicReacher::decode_goal(const Eigen::VectorXd& g) const {
    if (g.size() != 2) {
        throw ConfigError("reacher goals are 2-vectors");
    }
    return {g[0] * reach(), g[1] * reach()};
}

Eigen::VectorXd KinematicReacher::observe() const {
    const Point t = tip();
    Eigen::VectorXd s(8);
    s << std::cos(angles_[0]), std::sin(angles_[0]), std::cos(angles_[1]), std::sin(angles_[1]), velocities_[0],
        velocities_[1], t.x / reach(), t.y / reach();
    return s;
}

double KinematicReacher::steps_to_reach(Point p) const {
    const double r = std::hypot(p.x, p.y);
    const double l1 = config_.link1;
    const double l2 = config_.link2;
    if (r > l1 + l2 + 1e-12 || r < std::abs(l1 - l2) - 1e-12) {
        return std::numeric_limits<double>::infinity();
    }
    const double c2 = std::clamp((r * r - l1 * l1 - l2 * l2) / (2.0 * l1 * l2), -1.0, 1.0);
    double best = std::numeric_limits<double>::infinity();
    for (double sign : {1.0, -1.0}) {
        const double q2 = sign * std::acos(c2);
        const double q1 = wrap_angle(std::atan2(p.y, p.x) - std::atan2(l2 * std::sin(q2), l1 + l2 * std::cos(q2)));
        const double travel = std::max(std::abs(q1), std::abs(q2));
        // slack absorbs rounding in the inverse kinematics near full extension
        best = std::min(best, std::ceil(travel / (config_.action_bound * config_.dt) - 1e-6));
    }
    return best;
}

bool KinematicReacher::reachable(Point p) const {
    return steps_to_reach(p) <= static_cast<double>(config_.max_steps);
}

Eigen::VectorXd KinematicReacher::reset(const Eigen::VectorXd& goal) {
    return reset(decode_goal(goal));
}

Eigen::VectorXd KinematicReacher::reset(Point goal) {
    if (!std::isfinite(goal.x) || !std::isfinite(goal.y) || !reachable(goal)) {
        throw ConfigError("goal (" + std::to_string(goal.x) + ", " + std::to_string(goal.y) +
                          ") is not reachable within the episode");
    }
    goal_ = goal;
    angles_ = {0.0, 0.0};
    velocities_ = {0.0, 0.0};
    step_count_ = 0;
    active_ = true;
    return observe();
}

StepResult KinematicReacher::step(const Action& action) {
    const auto* vec = std::get_if<Eigen::VectorXd>(&action);
    if (vec == nullptr) {
        throw ConfigError("reacher takes continuous actions");
    }
    return step(*vec);
}

StepResult KinematicReacher::step(const Eigen::VectorXd& action) {
    if (!active_) {
        throw UsageError("step called on a finished episode; call reset first");
    }
    if (action.size() != 2) {
        throw ConfigError("reacher actions are 2-vectors");
    }
    for (int j = 0; j < 2; ++j) {
        const double a = std::isfinite(action[j]) ? action[j] : 0.0;
        velocities_[static_cast<std::size_t>(j)] = std::clamp(a, -config_.action_bound, config_.action_bound);
        angles_[static_cast<std::size_t>(j)] =
            wrap_angle(angles_[static_cast<std::size_t>(j)] + velocities_[static_cast<std::size_t>(j)] * config_.dt);
    }
    ++step_count_;
    const double d = distance(tip(), goal_);
    StepResult result;
    result.next_state = observe();
    result.reward = -d;
    result.reached_goal = d < config_.threshold;
    result.gamma = result.reached_goal ? 0.0 : config_.gamma;
    result.done = result.reached_goal || step_count_ >= config_.max_steps;
    active_ = !result.done;
    return result;
}

Eigen::VectorXd KinematicReacher::achieved_goal(const Eigen::VectorXd& state) const {
    if (state.size() != 8) {
        throw ConfigError("reacher states are 8-vectors");
    }
    return state.tail(2);
}

RewardOutcome KinematicReacher::reward_fn(const Eigen::VectorXd& /*state*/, const Action& /*action*/,
                                          const Eigen::VectorXd& next_state, const Eigen::VectorXd& goal) const {
    const Point t = decode_goal(achieved_goal(next_state));
    const double d = distance(t, decode_goal(goal));
    RewardOutcome out;
    out.reward = -d;
    out.reached_goal = d < config_.threshold;
    out.gamma = out.reached_goal ? 0.0 : config_.gamma;
    return out;
}

std::array<Point, 4> KinematicReacher::region_centres() const {
    std::array<Point, 4> centres{};
    for (int k = 0; k < 4; ++k) {
        const double a = M_PI / 4.0 + k * M_PI / 2.0;
        centres[static_cast<std::size_t>(k)] = {config_.region_distance * std::cos(a),
                                                config_.region_distance * std::sin(a)};
    }
    return centres;
}

bool KinematicReacher::in_training_region(Point p) const {
    for (const auto& c : region_centres()) {
        if (distance(p, c) <= config_.region_radius) {
            return true;
        }
    }
    return false;
}

std::vector<Point> KinematicReacher::sample_training_goals(Rng& rng, int per_region) const {
    if (per_region < 0) {
        throw ConfigError("per_region must be non-negative");
    }
    std::vector<Point> goals;
    for (const auto& c : region_centres()) {
        int found = 0;
        for (int attempt = 0; found < per_region; ++attempt) {
            if (attempt > 10000) {
                throw ConfigError("training region around (" + std::to_string(c.x) + ", " + std::to_string(c.y) +
                                  ") has no reachable points");
            }
            const double r = config_.region_radius * std::sqrt(uniform01(rng));
            const double a = uniform(rng, -M_PI, M_PI);
            const Point p{c.x + r * std::cos(a), c.y + r * std::sin(a)};
            if (reachable(p)) {
                goals.push_back(p);
                ++found;
            }
        }
    }
    return goals;
}

std::vector<Point> KinematicReacher::sample_test_goals(Rng& rng, int count) const {
    if (count < 0) {
        throw ConfigError("count must be non-negative");
    }
    std::vector<Point> goals;
    const double r_max = reach();
    for (int attempt = 0; static_cast<int>(goals.size()) < count; ++attempt) {
        if (attempt > 100000) {
            throw ConfigError("could not sample reachable test goals");
        }
        const Point p{uniform(rng, -r_max, r_max), uniform(rng, -r_max, r_max)};
        if (reachable(p) && !in_training_region(p)) {
            goals.push_back(p);
        }
    }
    return goals;
}

} // namespace usf::envs
