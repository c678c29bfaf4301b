#include "usf/envs/grid_world.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "usf/core/error.hpp"

namespace usf::envs {

namespace {
constexpr double kStepPenalty = 0.1;
}

std::string to_string(RewardStructure structure) {
    switch (structure) {
    case RewardStructure::constant:
        return "constant";
    case RewardStructure::room:
        return "room";
    case RewardStructure::mixed:
        return "mixed";
    }
    return "constant";
}

RewardStructure reward_structure_from_string(const std::string& name) {
    if (name == "constant") {
        return RewardStructure::constant;
    }
    if (name == "room") {
        return RewardStructure::room;
    }
    if (name == "mixed") {
        return RewardStructure::mixed;
    }
    throw ConfigError("unknown reward structure '" + name + "' (expected constant, room or mixed)");
}

GridWorld::GridWorld(GridLayout layout, GridConfig config, std::uint64_t seed)
    : layout_(std::move(layout)), config_(config), rng_(seed) {
    if (config_.max_steps < 1) {
        throw ConfigError("max_steps must be positive");
    }
    if (!(config_.gamma >= 0.0 && config_.gamma <= 1.0)) {
        throw ConfigError("gamma must lie in [0, 1]");
    }
    position_ = layout_.start();
}

Eigen::VectorXd GridWorld::encode(Cell cell) const {
    Eigen::VectorXd v(2);
    v[0] = layout_.width() > 1 ? static_cast<double>(cell.x) / (layout_.width() - 1) : 0.0;
    v[1] = layout_.height() > 1 ? static_cast<double>(cell.y) / (layout_.height() - 1) : 0.0;
    return v;
}

Cell GridWorld::decode(const Eigen::VectorXd& v) const {
    if (v.size() != 2) {
        throw ConfigError("grid states and goals are 2-vectors");
    }
    return {static_cast<int>(std::lround(v[0] * (layout_.width() - 1))),
            static_cast<int>(std::lround(v[1] * (layout_.height() - 1)))};
}

Eigen::VectorXd GridWorld::reset(const Eigen::VectorXd& goal) {
    return reset(decode(goal));
}

Eigen::VectorXd GridWorld::reset(Cell goal) {
    if (!layout_.is_floor(goal)) {
        throw ConfigError("goal " + to_string(goal) + " is not a floor cell");
    }
    if (goal == layout_.start()) {
        throw ConfigError("goal " + to_string(goal) + " coincides with the start cell");
    }
    goal_ = goal;
    position_ = layout_.start();
    step_count_ = 0;
    active_ = true;
    if (config_.structure == RewardStructure::mixed) {
        episode_structure_ = bernoulli(rng_, 0.5) ? RewardStructure::room : RewardStructure::constant;
    } else {
        episode_structure_ = config_.structure;
    }
    return encode(position_);
}

StepResult GridWorld::step(const Action& action) {
    const auto* index = std::get_if<std::size_t>(&action);
    if (index == nullptr) {
        throw ConfigError("gridworld takes discrete actions");
    }
    return step(*index);
}

StepResult GridWorld::step(std::size_t action) {
    if (!active_) {
        throw UsageError("step called on a finished episode; call reset first");
    }
    position_ = layout_.move(position_, action);
    ++step_count_;
    StepResult result;
    result.next_state = encode(position_);
    result.reached_goal = position_ == goal_;
    result.reward = reward(position_, goal_, episode_structure_);
    result.gamma = result.reached_goal ? 0.0 : config_.gamma;
    result.done = result.reached_goal || step_count_ >= config_.max_steps;
    active_ = !result.done;
    return result;
}

RewardOutcome GridWorld::reward_fn(const Eigen::VectorXd& /*state*/, const Action& /*action*/,
                                   const Eigen::VectorXd& next_state, const Eigen::VectorXd& goal) const {
    const Cell next = decode(next_state);
    const Cell g = decode(goal);
    RewardOutcome out;
    out.reached_goal = next == g;
    out.reward = reward(next, g, episode_structure_);
    out.gamma = out.reached_goal ? 0.0 : config_.gamma;
    return out;
}

double GridWorld::room_reward(Cell cell, Cell goal) const {
    if (!layout_.is_floor(cell) || !layout_.is_floor(goal)) {
        throw ConfigError("room_reward needs floor cells");
    }
    if (cell == goal) {
        return 0.0;
    }
    const auto from = layout_.rooms_touching(cell);
    const auto to = layout_.rooms_touching(goal);
    int best = std::numeric_limits<int>::max();
    for (auto a : from) {
        for (auto b : to) {
            best = std::min(best, layout_.room_distance(a, b));
        }
    }
    if (best == std::numeric_limits<int>::max()) {
        throw ConfigError("no room path from " + to_string(cell) + " to " + to_string(goal));
    }
    const int k = 1 + best;
    return -static_cast<double>(k) / 10.0;
}

double GridWorld::reward(Cell cell, Cell goal, RewardStructure resolved) const {
    if (cell == goal) {
        return 0.0;
    }
    switch (resolved) {
    case RewardStructure::constant:
        return -kStepPenalty;
    case RewardStructure::room:
        return room_reward(cell, goal);
    case RewardStructure::mixed:
        throw UsageError("mixed reward structure must be resolved per episode");
    }
    return -kStepPenalty;
}

Eigen::VectorXd GridWorld::one_hot_phi(const Eigen::VectorXd& state) const {
    const std::size_t idx = layout_.index_checked(decode(state));
    Eigen::VectorXd phi = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(layout_.cell_count()));
    phi[static_cast<Eigen::Index>(idx)] = 1.0;
    return phi;
}

std::vector<Cell> GridWorld::sample_goal_set(Rng& rng, int per_room, std::span<const Cell> exclude) const {
    if (per_room < 0) {
        throw ConfigError("per_room must be non-negative");
    }
    std::vector<Cell> goals;
    if (per_room == 0) {
        return goals;
    }
    const std::set<Cell> excluded(exclude.begin(), exclude.end());
    for (std::size_t room = 0; room < layout_.room_count(); ++room) {
        std::vector<Cell> candidates;
        for (const Cell& c : layout_.room_cells(room)) {
            if (c != layout_.start() && excluded.count(c) == 0) {
                candidates.push_back(c);
            }
        }
        if (candidates.size() < static_cast<std::size_t>(per_room)) {
            throw ConfigError("room " + std::to_string(room) + " has only " + std::to_string(candidates.size()) +
                              " free cells, " + std::to_string(per_room) + " goals requested");
        }
        // partial Fisher-Yates
        for (int i = 0; i < per_room; ++i) {
            const std::size_t j =
                static_cast<std::size_t>(i) + uniform_index(rng, candidates.size() - static_cast<std::size_t>(i));
            std::swap(candidates[static_cast<std::size_t>(i)], candidates[j]);
            goals.push_back(candidates[static_cast<std::size_t>(i)]);
        }
    }
    return goals;
}

} // namespace usf::envs
