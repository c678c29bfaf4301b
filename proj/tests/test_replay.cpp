#include <doctest.h>

#include <cmath>
#include <sstream>

#include "usf/core/error.hpp"
#include "usf/envs/grid_world.hpp"
#include "usf/replay/her.hpp"
#include "usf/replay/replay_store.hpp"

using namespace usf;
using namespace usf::replay;

namespace {

Transition tagged(double tag) {
    Transition t;
    t.g = Eigen::VectorXd::Constant(2, tag);
    t.s = Eigen::VectorXd::Constant(2, tag);
    t.s_next = Eigen::VectorXd::Constant(2, tag + 0.5);
    t.a = static_cast<std::size_t>(tag) % 4;
    t.r = tag;
    t.gamma = 0.99;
    return t;
}

envs::GridWorld grid() {
    return envs::GridWorld(envs::GridLayout::four_rooms(), envs::GridConfig{}, 0);
}

RewardFn reward_of(const envs::GridWorld& env) {
    return [&env](const Eigen::VectorXd& s, const Action& a, const Eigen::VectorXd& sn, const Eigen::VectorXd& g) {
        return env.reward_fn(s, a, sn, g);
    };
}

AchievedGoalFn achieved_of(const envs::GridWorld& env) {
    return [&env](const Eigen::VectorXd& s) { return env.achieved_goal(s); };
}

} // namespace

TEST_CASE("FIFO eviction at capacity") {
    ReplayStore store(2);
    store.store(tagged(1));
    store.store(tagged(2));
    store.store(tagged(3));
    CHECK(store.size() == 2);
    CHECK(store.insert_count() == 3);
    CHECK(store.at(0).r == 2);
    CHECK(store.at(1).r == 3);
    for (int i = 4; i < 50; ++i) {
        store.store(tagged(i));
        CHECK(store.size() <= 2);
    }
    CHECK(store.at(0).r == 48);
    CHECK_THROWS_AS(ReplayStore(0), ConfigError);
}

TEST_CASE("a single stored transition comes back verbatim") {
    ReplayStore store(10);
    Transition t = tagged(3);
    t.a = Eigen::VectorXd::Constant(2, 0.25);
    store.store(t);
    Rng rng(0);
    const std::vector<Transition> batch = store.sample(32, rng);
    REQUIRE(batch.size() == 32);
    for (const Transition& b : batch) {
        CHECK(b.g == t.g);
        CHECK(b.s == t.s);
        CHECK(b.s_next == t.s_next);
        CHECK(std::get<Eigen::VectorXd>(b.a) == std::get<Eigen::VectorXd>(t.a));
        CHECK(b.r == t.r);
        CHECK(b.gamma == t.gamma);
    }
}

TEST_CASE("sampling an empty store is an error") {
    const ReplayStore store(4);
    Rng rng(0);
    CHECK_THROWS_AS(store.draw(1, rng), UsageError);
    DualStore dual(4);
    CHECK_THROWS_AS(dual.draw(1, rng), UsageError);
    dual.store(tagged(1));
    CHECK(dual.draw(0, rng).empty());
}

TEST_CASE("uniform sampling passes a frequency test") {
    ReplayStore store(10);
    for (int i = 0; i < 10; ++i) {
        store.store(tagged(i));
    }
    Rng rng(12);
    const int draws = 100000;
    std::vector<int> counts(10, 0);
    for (const Transition* t : store.draw(draws, rng)) {
        counts[static_cast<std::size_t>(t->r)]++;
    }
    const double p = 0.1;
    const double sd = std::sqrt(draws * p * (1 - p));
    for (int c : counts) {
        CHECK(std::abs(c - draws * p) < 3 * sd);
    }
}

TEST_CASE("a fixed seed reproduces the batch sequence") {
    ReplayStore store(100);
    for (int i = 0; i < 100; ++i) {
        store.store(tagged(i));
    }
    auto run = [&](std::uint64_t seed) {
        Rng rng(seed);
        std::vector<double> out;
        for (int k = 0; k < 5; ++k) {
            for (const Transition* t : store.draw(8, rng)) {
                out.push_back(t->r);
            }
        }
        return out;
    };
    CHECK(run(5) == run(5));
    CHECK(run(5) != run(6));
}

TEST_CASE("dual store: writes go to the current store and draws split evenly") {
    DualStore dual(100);
    for (int i = 0; i < 5; ++i) {
        dual.store(tagged(1));
    }
    Rng rng(3);
    // old empty: everything comes from the current store
    for (const Transition* t : dual.draw(1000, rng)) {
        CHECK(t->r == 1);
    }
    dual.retire();
    CHECK(dual.old_store().size() == 5);
    CHECK(dual.new_store().empty());
    for (const Transition* t : dual.draw(100, rng)) {
        CHECK(t->r == 1);
    }
    for (int i = 0; i < 7; ++i) {
        dual.store(tagged(2));
    }
    CHECK(dual.old_store().size() == 5);
    CHECK(dual.old_store().insert_count() == 5);
    const int draws = 100000;
    int old = 0;
    for (const Transition* t : dual.draw(draws, rng)) {
        old += t->r == 1 ? 1 : 0;
    }
    const double fraction = static_cast<double>(old) / draws;
    CHECK(fraction >= 0.49);
    CHECK(fraction <= 0.51);
}

TEST_CASE("mixed draws take HER items at the configured rate") {
    DualStore dual(100);
    dual.store(tagged(1));
    HerStore her(100, 0.5);
    Rng rng(9);
    for (const Transition* t : draw_mixed(dual, &her, 100, rng)) {
        CHECK(t->r == 1);  // empty HER store is skipped
    }
    her.store.store(tagged(7));
    int from_her = 0;
    const int draws = 40000;
    for (const Transition* t : draw_mixed(dual, &her, draws, rng)) {
        from_her += t->r == 7 ? 1 : 0;
    }
    CHECK(std::abs(from_her / double(draws) - 0.5) < 0.01);
}

TEST_CASE("store snapshots round-trip through an archive") {
    ReplayStore store(3);
    for (int i = 0; i < 5; ++i) {
        store.store(tagged(i));
    }
    nn::Archive archive;
    put_store(archive, "buf", store);
    std::stringstream bytes;
    archive.write(bytes);
    const ReplayStore back = get_store(nn::Archive::read(bytes), "buf");
    CHECK(back.size() == 3);
    CHECK(back.capacity() == 3);
    CHECK(back.insert_count() == 5);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(back.at(i).r == store.at(i).r);
        CHECK(back.at(i).s == store.at(i).s);
        CHECK(std::get<std::size_t>(back.at(i).a) == std::get<std::size_t>(store.at(i).a));
    }
}

TEST_CASE("relabelling a failed episode makes its last step reach the goal") {
    envs::GridWorld env = grid();
    const envs::Cell goal{11, 11};
    Eigen::VectorXd s = env.reset(goal);
    std::vector<Transition> episode;
    for (std::size_t a : {1u, 1u, 2u, 2u, 1u}) {
        const envs::StepResult r = env.step(std::size_t{a});
        episode.push_back({env.encode(goal), s, std::size_t{a}, r.next_state, r.reward, r.gamma});
        s = r.next_state;
    }
    Rng rng(0);
    const auto relabelled = her_relabel(episode, 30, reward_of(env), achieved_of(env), rng);
    REQUIRE(relabelled.size() == 5);
    CHECK(relabelled.back().g == episode.back().s_next);
    CHECK(relabelled.back().r == 0.0);
    CHECK(relabelled.back().gamma == 0.0);
    for (std::size_t t = 0; t < relabelled.size(); ++t) {
        if (relabelled[t].g != relabelled[t].s_next) {
            CHECK(relabelled[t].r == doctest::Approx(-0.1));
            CHECK(relabelled[t].gamma == 0.99);
        }
    }
}

TEST_CASE("relabelled goals come from the future window") {
    envs::GridWorld env = grid();
    const envs::Cell goal{11, 11};
    Eigen::VectorXd s = env.reset(goal);
    std::vector<Transition> episode;
    for (int t = 0; env.episode_active(); ++t) {
        const std::size_t a = static_cast<std::size_t>(t % 3 == 0 ? 2 : 1);
        const envs::StepResult r = env.step(a);
        episode.push_back({env.encode(goal), s, a, r.next_state, r.reward, r.gamma});
        s = r.next_state;
    }
    Rng rng(1);
    const int k = 4;
    for (int rep = 0; rep < 20; ++rep) {
        const auto out = her_relabel(episode, k, reward_of(env), achieved_of(env), rng);
        REQUIRE(out.size() == episode.size());
        for (std::size_t t = 0; t < out.size(); ++t) {
            bool found = false;
            for (std::size_t j = t + 1; j <= std::min(t + k, episode.size()); ++j) {
                found = found || episode[j - 1].s_next == out[t].g;
            }
            CHECK(found);
            CHECK(out[t].s == episode[t].s);
            CHECK(std::get<std::size_t>(out[t].a) == std::get<std::size_t>(episode[t].a));
        }
    }
}

TEST_CASE("zero future steps yields nothing and a missing reward function is unsupported") {
    envs::GridWorld env = grid();
    std::vector<Transition> episode{tagged(0.0)};
    Rng rng(0);
    CHECK(her_relabel(episode, 0, reward_of(env), achieved_of(env), rng).empty());
    CHECK_THROWS_AS(her_relabel(episode, 5, RewardFn{}, achieved_of(env), rng), Unsupported);
}
