#include "usf/harness/goals.hpp"

#include "usf/core/error.hpp"
#include "usf/core/random.hpp"
#include "usf/envs/grid_world.hpp"
#include "usf/envs/reacher.hpp"

namespace usf::harness {

std::unique_ptr<envs::GoalEnv> make_env(const ExperimentConfig& config, std::uint64_t seed) {
    if (config.env == EnvKind::gridworld) {
        envs::GridLayout layout =
            config.layout == "four_rooms" ? envs::GridLayout::four_rooms() : envs::GridLayout::load(config.layout);
        return std::make_unique<envs::GridWorld>(std::move(layout), config.grid, seed);
    }
    return std::make_unique<envs::KinematicReacher>(config.reacher);
}

namespace {

std::vector<envs::Cell> grid_goals(const envs::GridWorld& grid, Rng& rng, int count,
                                   const std::vector<envs::Cell>& exclude) {
    if (count == 0) {
        return {};
    }
    const auto rooms = static_cast<int>(grid.layout().room_count());
    if (rooms == 0 || count % rooms != 0) {
        throw ConfigError("goal count " + std::to_string(count) + " must be a multiple of the room count " +
                          std::to_string(rooms));
    }
    return grid.sample_goal_set(rng, count / rooms, exclude);
}

} // namespace

GoalSets make_goal_sets(const ExperimentConfig& config, const envs::GoalEnv& env, std::uint64_t seed) {
    Rng rng(derive_seed(seed, 4));
    GoalSets sets;
    if (const auto* grid = dynamic_cast<const envs::GridWorld*>(&env)) {
        std::vector<envs::Cell> used;
        auto take = [&](int count, std::vector<Eigen::VectorXd>& out) {
            for (const envs::Cell& c : grid_goals(*grid, rng, count, used)) {
                used.push_back(c);
                out.push_back(grid->encode(c));
            }
        };
        take(config.goals_per_stage, sets.source);
        take(config.goals_per_stage, sets.target);
        take(config.holdout_goals, sets.holdout);
        return sets;
    }
    if (const auto* reacher = dynamic_cast<const envs::KinematicReacher*>(&env)) {
        if (config.goals_per_stage % 4 != 0) {
            throw ConfigError("reacher goal count must be a multiple of the 4 training regions");
        }
        for (const auto& p : reacher->sample_training_goals(rng, config.goals_per_stage / 4)) {
            sets.source.push_back(reacher->encode_goal(p));
        }
        for (const auto& p : reacher->sample_training_goals(rng, config.goals_per_stage / 4)) {
            sets.target.push_back(reacher->encode_goal(p));
        }
        for (const auto& p : reacher->sample_test_goals(rng, config.holdout_goals)) {
            sets.holdout.push_back(reacher->encode_goal(p));
        }
        return sets;
    }
    throw ConfigError("no goal sampler for env '" + env.name() + "'");
}

} // namespace usf::harness
