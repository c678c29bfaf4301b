#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "usf/core/random.hpp"
#include "usf/envs/goal_env.hpp"
#include "usf/nn/archive.hpp"

namespace usf::replay {

struct Transition {
    Eigen::VectorXd g;
    Eigen::VectorXd s;
    Action a;
    Eigen::VectorXd s_next;
    double r = 0.0;
    /// 0 exactly when s_next satisfies g.
    double gamma = 0.0;
};

/// Pointers into the stores; valid until the next write to any of them.
using Batch = std::vector<const Transition*>;

class ReplayStore;
ReplayStore get_store(const nn::Archive& archive, const std::string& prefix);

/// Fixed-capacity ring buffer with FIFO eviction and uniform sampling with
/// replacement.
class ReplayStore {
public:
    explicit ReplayStore(std::size_t capacity = 100000);

    void store(Transition t);
    void clear();

    std::size_t size() const { return items_.size(); }
    bool empty() const { return items_.empty(); }
    std::size_t capacity() const { return capacity_; }
    std::uint64_t insert_count() const { return insert_count_; }

    /// Item by age: 0 is the oldest retained transition.
    const Transition& at(std::size_t i) const;

    const Transition& draw_one(Rng& rng) const;
    Batch draw(std::size_t batch, Rng& rng) const;
    std::vector<Transition> sample(std::size_t batch, Rng& rng) const;

private:
    friend ReplayStore get_store(const nn::Archive& archive, const std::string& prefix);

    std::size_t capacity_;
    std::vector<Transition> items_;
    std::size_t head_ = 0;  // slot that the next insert overwrites once full
    std::uint64_t insert_count_ = 0;
};

/// Source-task store `old` plus current-task store `fresh`. Writes go to
/// `fresh`; each draw picks a store by a fair coin when both hold data and
/// falls back to the non-empty one otherwise.
class DualStore {
public:
    explicit DualStore(std::size_t capacity = 100000, double pick_probability = 0.5);

    void store(Transition t) { fresh_.store(std::move(t)); }
    /// Moves the current store into `old` (discarding the previous `old`) and
    /// starts an empty current store. Called at the task swap.
    void retire();

    const Transition& draw_one(Rng& rng) const;
    Batch draw(std::size_t batch, Rng& rng) const;
    std::vector<Transition> sample(std::size_t batch, Rng& rng) const;

    bool empty() const { return old_.empty() && fresh_.empty(); }
    std::size_t size() const { return old_.size() + fresh_.size(); }

    ReplayStore& old_store() { return old_; }
    const ReplayStore& old_store() const { return old_; }
    ReplayStore& new_store() { return fresh_; }
    const ReplayStore& new_store() const { return fresh_; }
    double pick_probability() const { return pick_probability_; }

private:
    ReplayStore old_;
    ReplayStore fresh_;
    double pick_probability_;
};

/// Hallucinated (goal-relabelled) transitions, drawn in place of a regular
/// draw with `sampling_probability`.
struct HerStore {
    explicit HerStore(std::size_t capacity = 100000, double sampling_probability = 0.5)
        : store(capacity), sampling_probability(sampling_probability) {}

    ReplayStore store;
    double sampling_probability;
};

/// Per-draw mixture: with `her->sampling_probability` (when `her` is non-null
/// and non-empty) a HER draw, otherwise a DualStore draw.
Batch draw_mixed(const DualStore& main, const HerStore* her, std::size_t batch, Rng& rng);

void put_store(nn::Archive& archive, const std::string& prefix, const ReplayStore& store);
ReplayStore get_store(const nn::Archive& archive, const std::string& prefix);

} // namespace usf::replay
