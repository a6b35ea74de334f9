#include "cidlab/runtime.hpp"

#include "../support/episode_fixtures.hpp"

#include <gtest/gtest.h>

#include <regex>
#include <set>

using namespace cid;

namespace {

struct TrainingSetup {
    EpisodeConfig env = cid::testing::small_env(0.0);
    std::vector<DayRecord> days{cid::testing::arbitrage_day(env), cid::testing::waiting_day(env)};
    TrainConfig train;

    TrainingSetup() {
        train.episodes_per_day = 8;
        train.refit_every = 3;
        train.mlp.epochs = 15;
        train.seed = 21;
    }
};

}  // namespace

TEST(Runtime, DeterministicModeMatchesSequential) {
    TrainingSetup s;
    RuntimeConfig rt;
    rt.deterministic = true;
    const auto seq = train_sequential(s.days, s.env, s.train);
    const auto a = run(s.days, s.env, s.train, rt);
    const auto b = run(s.days, s.env, s.train, rt);
    EXPECT_EQ(a.store, seq.store);
    EXPECT_EQ(a.refits, seq.refits);
    const auto text = format_checkpoint({s.env, {seq.ensemble}, {}});
    EXPECT_EQ(format_checkpoint({s.env, {a.ensemble}, {}}), text);
    EXPECT_EQ(format_checkpoint({s.env, {b.ensemble}, {}}), text);
}

TEST(Runtime, FourActorsProduceExactlyTheSchedule) {
    TrainingSetup s;
    RuntimeConfig rt;
    rt.actors = 4;
    rt.local_buffer = 2;
    std::vector<std::string> lines;
    const auto r = run(s.days, s.env, s.train, rt, [&](const std::string& l) { lines.push_back(l); });
    EXPECT_EQ(r.trajectories, 16);
    ASSERT_EQ(r.store.size(), 16u);
    std::set<std::pair<int, long>> tags;
    std::map<int, long> per_actor;
    for (const auto& t : r.store.items()) {
        EXPECT_EQ(t.steps(), s.env.calendar.steps());
        tags.insert({t.actor, t.index});
        per_actor[t.actor] = std::max(per_actor[t.actor], t.index + 1);
    }
    EXPECT_EQ(tags.size(), 16u);
    long sum = 0;
    for (const auto& [k, n] : per_actor) sum += n;
    EXPECT_EQ(sum, 16);  // indices are contiguous per actor
    ASSERT_EQ(lines.size(), 16u);
    const std::regex pattern(R"(episode=\d+ actor=[0-3] day=\S+ return=-?\d+\.\d{2} epsilon=\d\.\d{6})");
    std::set<std::string> episodes;
    for (const auto& l : lines) {
        EXPECT_TRUE(std::regex_match(l, pattern)) << l;
        episodes.insert(l.substr(0, l.find(' ')));
    }
    EXPECT_EQ(episodes.size(), 16u);
}

TEST(Runtime, MinimumBufferBlocksRefits) {
    TrainingSetup s;
    RuntimeConfig rt;
    rt.actors = 2;
    rt.min_buffer = 100;
    const auto r = run(s.days, s.env, s.train, rt);
    EXPECT_EQ(r.refits, 0);
    EXPECT_FALSE(r.ensemble.trained());
    EXPECT_EQ(r.store.size(), 16u);
}

TEST(Runtime, ActorFailureNamesSeedAndDay) {
    TrainingSetup s;
    s.days[1].exog.pop_back();
    s.days[1].arrivals.pop_back();
    RuntimeConfig rt;
    rt.actors = 2;
    try {
        run(s.days, s.env, s.train, rt);
        FAIL() << "expected a training error";
    } catch (const TrainingError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("seed"), std::string::npos) << msg;
        EXPECT_NE(msg.find("waiting"), std::string::npos) << msg;
    }
}

TEST(Runtime, ConfigChecks) {
    RuntimeConfig rt;
    rt.actors = 0;
    EXPECT_THROW(rt.check(), ValidationError);
    rt.actors = 2;
    rt.deterministic = true;
    EXPECT_THROW(rt.check(), ValidationError);
}

TEST(Runtime, LogLineFormat) {
    EXPECT_EQ(episode_log_line(3, 1, "day-0002", 12.5, 0.25), "episode=3 actor=1 day=day-0002 return=12.50 epsilon=0.250000");
}
