#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "usf/core/random.hpp"
#include "usf/envs/goal_env.hpp"

namespace usf::envs {

struct Point {
    double x = 0.0;
    double y = 0.0;
};

struct ReacherConfig {
    double link1 = 0.10;
    double link2 = 0.11;
    double dt = 0.05;
    double threshold = 0.04;
    double action_bound = 1.0;
    int max_steps = 50;
    double gamma = 0.99;
    /// Training regions: four disks centred at this distance from the base on the diagonals.
    double region_distance = 0.15;
    double region_radius = 0.03;
};

/// Kinematic two-link planar arm. Actions are joint-velocity commands clipped
/// to +-action_bound; each step integrates angles += velocity * dt, so the tip
/// is always the exact forward kinematics of the joint angles.
///
/// State (8): cos/sin of both joint angles, both joint velocities, and the tip
/// position divided by the total reach. Goals are target tip positions divided
/// by the total reach. Reward is the negative tip-goal distance in metres.
class KinematicReacher final : public GoalEnv {
public:
    KinematicReacher(ReacherConfig config = {});

    std::string name() const override { return "reacher"; }
    std::size_t state_dim() const override { return 8; }
    std::size_t goal_dim() const override { return 2; }
    ActionSpace action_space() const override { return {0, 2, -config_.action_bound, config_.action_bound}; }
    int max_steps() const override { return config_.max_steps; }

    Eigen::VectorXd reset(const Eigen::VectorXd& goal) override;
    Eigen::VectorXd reset(Point goal);
    StepResult step(const Action& action) override;
    StepResult step(const Eigen::VectorXd& action);
    bool episode_active() const override { return active_; }

    RewardOutcome reward_fn(const Eigen::VectorXd& state, const Action& action, const Eigen::VectorXd& next_state,
                            const Eigen::VectorXd& goal) const override;
    Eigen::VectorXd achieved_goal(const Eigen::VectorXd& state) const override;
    std::unique_ptr<GoalEnv> clone() const override { return std::make_unique<KinematicReacher>(*this); }

    Point forward_kinematics(double q1, double q2) const;
    Point tip() const { return forward_kinematics(angles_[0], angles_[1]); }
    double reach() const { return config_.link1 + config_.link2; }

    /// Joint moves needed to put the tip on `p` from the home pose at full
    /// speed (best elbow solution); infinity outside the annulus.
    double steps_to_reach(Point p) const;
    bool reachable(Point p) const;

    std::array<Point, 4> region_centres() const;
    bool in_training_region(Point p) const;
    /// `per_region` uniform points in each training disk.
    std::vector<Point> sample_training_goals(Rng& rng, int per_region) const;
    /// `count` uniform reachable points outside every training disk.
    std::vector<Point> sample_test_goals(Rng& rng, int count) const;

    Eigen::VectorXd encode_goal(Point p) const;
    Point decode_goal(const Eigen::VectorXd& g) const;

    const ReacherConfig& config() const { return config_; }
    const std::array<double, 2>& angles() const { return angles_; }
    const std::array<double, 2>& velocities() const { return velocities_; }
    Point goal() const { return goal_; }
    int step_count() const { return step_count_; }

private:
    Eigen::VectorXd observe() const;

    ReacherConfig config_;
    std::array<double, 2> angles_{0.0, 0.0};
    std::array<double, 2> velocities_{0.0, 0.0};
    Point goal_{};
    int step_count_ = 0;
    bool active_ = false;
};

} // namespace usf::envs
