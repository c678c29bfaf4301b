#include "usf/replay/her.hpp"

#include <algorithm>

#include "usf/core/error.hpp"

namespace usf::replay {

std::vector<Transition> her_relabel(const std::vector<Transition>& trajectory, int future_steps,
                                    const RewardFn& reward_fn, const AchievedGoalFn& achieved_goal, Rng& rng) {
    if (!reward_fn) {
        throw Unsupported("hindsight relabelling needs the environment reward function");
    }
    if (!achieved_goal) {
        throw Unsupported("hindsight relabelling needs the achieved-goal map");
    }
    if (future_steps < 0) {
        throw ConfigError("future_steps must be non-negative");
    }
    std::vector<Transition> out;
    if (future_steps == 0) {
        return out;
    }
    const std::size_t T = trajectory.size();
    out.reserve(T);
    for (std::size_t t = 0; t < T; ++t) {
        const std::size_t last = std::min(t + static_cast<std::size_t>(future_steps), T);
        // state index j in [t + 1, last]; s_j is the s_next of transition j - 1
        const std::size_t j = t + 1 + uniform_index(rng, last - t);
        Transition relabeled = trajectory[t];
        relabeled.g = achieved_goal(trajectory[j - 1].s_next);
        const envs::RewardOutcome outcome = reward_fn(relabeled.s, relabeled.a, relabeled.s_next, relabeled.g);
        relabeled.r = outcome.reward;
        relabeled.gamma = outcome.gamma;
        out.push_back(std::move(relabeled));
    }
    return out;
}

} // namespace usf::replay
