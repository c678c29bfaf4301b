#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "usf/core/random.hpp"
#include "usf/envs/goal_env.hpp"
#include "usf/envs/grid_layout.hpp"

namespace usf::envs {

enum class RewardStructure { constant, room, mixed };

std::string to_string(RewardStructure structure);
RewardStructure reward_structure_from_string(const std::string& name);

struct GridConfig {
    RewardStructure structure = RewardStructure::constant;
    int max_steps = 31;
    double gamma = 0.99;
};

/// Four-room style gridworld. States and goals are (x, y) normalized to
/// [0, 1] by the map width and height. Rewards are charged on the cell the
/// agent lands in: 0 on reaching the goal, otherwise -0.1 (constant) or
/// -k/10 (room), where k counts the rooms still to traverse including the
/// goal's room. Reaching the goal ends the episode with gamma 0; hitting the
/// step limit ends it with gamma unchanged.
class GridWorld final : public GoalEnv {
public:
    GridWorld(GridLayout layout, GridConfig config, std::uint64_t seed);

    std::string name() const override { return "gridworld"; }
    std::size_t state_dim() const override { return 2; }
    std::size_t goal_dim() const override { return 2; }
    ActionSpace action_space() const override { return {kMoveCount, 0, 0.0, 0.0}; }
    int max_steps() const override { return config_.max_steps; }

    Eigen::VectorXd reset(const Eigen::VectorXd& goal) override;
    Eigen::VectorXd reset(Cell goal);
    StepResult step(const Action& action) override;
    StepResult step(std::size_t action);
    bool episode_active() const override { return active_; }

    RewardOutcome reward_fn(const Eigen::VectorXd& state, const Action& action, const Eigen::VectorXd& next_state,
                            const Eigen::VectorXd& goal) const override;
    Eigen::VectorXd achieved_goal(const Eigen::VectorXd& state) const override { return state; }
    std::unique_ptr<GoalEnv> clone() const override { return std::make_unique<GridWorld>(*this); }

    /// -k/10 for landing on `cell` while pursuing `goal`; 0 on the goal itself.
    double room_reward(Cell cell, Cell goal) const;
    /// Reward for landing on `cell` under a resolved (non-mixed) structure.
    double reward(Cell cell, Cell goal, RewardStructure resolved) const;

    /// Indicator of the cell encoded by `state`.
    Eigen::VectorXd one_hot_phi(const Eigen::VectorXd& state) const;

    /// `per_room` distinct goals from every room, uniformly without
    /// replacement, skipping the start cell, doorways and `exclude`.
    std::vector<Cell> sample_goal_set(Rng& rng, int per_room, std::span<const Cell> exclude = {}) const;

    Eigen::VectorXd encode(Cell cell) const;
    Cell decode(const Eigen::VectorXd& v) const;

    const GridLayout& layout() const { return layout_; }
    const GridConfig& config() const { return config_; }
    Cell position() const { return position_; }
    Cell goal() const { return goal_; }
    int step_count() const { return step_count_; }
    /// Structure in force this episode (constant or room; mixed is resolved at reset).
    RewardStructure episode_structure() const { return episode_structure_; }

private:
    GridLayout layout_;
    GridConfig config_;
    Rng rng_;
    Cell position_{};
    Cell goal_{};
    int step_count_ = 0;
    bool active_ = false;
    RewardStructure episode_structure_ = RewardStructure::constant;
};

} // namespace usf::envs
