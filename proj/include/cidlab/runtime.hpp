#pragma once

#include "cidlab/fitted_q.hpp"

#include <functional>
#include <string>
#include <vector>

namespace cid {

struct RuntimeConfig {
    int actors = 1;
    int local_buffer = 10;       // trajectories an actor collects before flushing
    std::size_t min_buffer = 1;  // global trajectories needed before the first refit
    bool deterministic = false;  // single actor, learner runs inline after each flush

    // Throws ValidationError on bad values; deterministic mode requires one actor.
    void check() const;
};

// One line per finished episode.
using LogSink = std::function<void(const std::string& line)>;

std::string episode_log_line(long episode, int actor, const std::string& day, double ret, double epsilon);

struct RunResult {
    QEnsemble ensemble;
    TrajectoryStore store;
    long trajectories = 0;  // received by the learner
    int refits = 0;
};

// Actors generate E * |days| episodes in total, claimed one at a time from a
// shared counter, and push whole local buffers to the learner. The learner
// owns the global store, refits after every `refit_every` new trajectories
// once `min_buffer` is reached, and publishes the ensemble as an immutable
// snapshot that actors pick up when they flush. Deterministic mode with
// local_buffer = refit_every reproduces train_sequential exactly.
RunResult run(const std::vector<DayRecord>& days, const EpisodeConfig& env, const TrainConfig& train,
              const RuntimeConfig& runtime, const LogSink& log = {});

}  // namespace cid
