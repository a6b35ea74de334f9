#include "cidlab/runtime.hpp"

#include <atomic>
#include <condition_variable>
#include <cstdio>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <thread>

namespace cid {

void RuntimeConfig::check() const {
    if (actors < 1) throw ValidationError("actor count must be at least 1");
    if (local_buffer < 1) throw ValidationError("local buffer must hold at least 1 trajectory");
    if (deterministic && actors != 1) throw ValidationError("deterministic mode runs exactly one actor");
}

std::string episode_log_line(long episode, int actor, const std::string& day, double ret, double epsilon) {
    char buf[96];
    std::snprintf(buf, sizeof buf, " return=%.2f epsilon=%.6f", ret, epsilon);
    return "episode=" + std::to_string(episode) + " actor=" + std::to_string(actor) + " day=" + day + buf;
}

namespace {

using Snapshot = std::shared_ptr<const QEnsemble>;

// Owns the global store and the published parameters.
class Learner {
public:
    Learner(const TrainConfig& train, const RuntimeConfig& rt, const EpisodeConfig& env)
        : train_(train), rt_(rt), env_(env), factory_(regressor_factory(train.regressor, train.mlp)),
          store_(train.capacity), snapshot_(std::make_shared<QEnsemble>()) {}

    void consume(std::vector<Trajectory>&& batch) {
        for (auto& t : batch) {
            store_.push(std::move(t));
            ++received_;
            ++pending_;
        }
        if (pending_ >= train_.refit_every) refit();
    }

    void finish() {
        if (pending_ > 0) refit();
    }

    Snapshot snapshot() const {
        std::lock_guard lock(slot_);
        return snapshot_;
    }

    RunResult result() && {
        return {QEnsemble(*snapshot()), std::move(store_), received_, refits_};
    }

private:
    void refit() {
        if (store_.size() < rt_.min_buffer) return;
        auto fitted = std::make_shared<const QEnsemble>(
            fit_q(store_, train_, factory_, env_.history, refit_seed(train_.seed, refits_)));
        ++refits_;
        pending_ = 0;
        std::lock_guard lock(slot_);
        snapshot_ = std::move(fitted);
    }

    const TrainConfig& train_;
    const RuntimeConfig& rt_;
    const EpisodeConfig& env_;
    RegressorFactory factory_;
    TrajectoryStore store_;
    long received_ = 0;
    long pending_ = 0;
    int refits_ = 0;
    mutable std::mutex slot_;
    Snapshot snapshot_;
};

// Many producers, one consumer; whole buffers keep their order per actor.
class Channel {
public:
    void send(std::vector<Trajectory>&& batch) {
        {
            std::lock_guard lock(m_);
            queue_.push_back(std::move(batch));
        }
        cv_.notify_one();
    }

    void producer_done() {
        {
            std::lock_guard lock(m_);
            ++done_;
        }
        cv_.notify_one();
    }

    // Empty once every producer is done and the queue drained.
    std::optional<std::vector<Trajectory>> receive(int producers) {
        std::unique_lock lock(m_);
        cv_.wait(lock, [&] { return !queue_.empty() || done_ == producers; });
        if (queue_.empty()) return std::nullopt;
        auto b = std::move(queue_.front());
        queue_.pop_front();
        return b;
    }

private:
    std::mutex m_;
    std::condition_variable cv_;
    std::deque<std::vector<Trajectory>> queue_;
    int done_ = 0;
};

struct ActorFailure {
    std::mutex m;
    std::string message;
    std::atomic<bool> failed{false};

    void record(const std::string& msg) {
        std::lock_guard lock(m);
        if (!failed.exchange(true)) message = msg;
    }
};

}  // namespace

RunResult run(const std::vector<DayRecord>& days, const EpisodeConfig& env, const TrainConfig& train,
              const RuntimeConfig& runtime, const LogSink& log) {
    train.check();
    runtime.check();
    if (days.empty()) throw ValidationError("training needs at least one day");
    const long total = static_cast<long>(train.episodes_per_day) * static_cast<long>(days.size());
    const long per_actor = (total + runtime.actors - 1) / runtime.actors;
    const int local = runtime.deterministic ? train.refit_every : runtime.local_buffer;

    Learner learner(train, runtime, env);
    std::atomic<long> next{0};
    std::mutex log_mutex;
    ActorFailure failure;

    // Runs actor k until the shared schedule is exhausted; `flush` hands a
    // full local buffer over and returns the snapshot to use next.
    auto actor_loop = [&](int k, const std::function<Snapshot(std::vector<Trajectory>&&)>& flush) {
        Explorer explorer(train, k, per_actor);
        Snapshot params = learner.snapshot();
        std::vector<Trajectory> buffer;
        std::string day = "-";
        try {
            for (long n = next.fetch_add(1); n < total && !failure.failed; n = next.fetch_add(1)) {
                const double eps = explorer.epsilon();
                auto tr = explorer.next(days, env, *params);
                day = tr.day;
                if (log) {
                    const auto line = episode_log_line(n, k, tr.day, tr.total(), eps);
                    std::lock_guard lock(log_mutex);
                    log(line);
                }
                buffer.push_back(std::move(tr));
                if (static_cast<int>(buffer.size()) >= local) {
                    params = flush(std::move(buffer));
                    buffer.clear();
                }
            }
            if (!buffer.empty()) flush(std::move(buffer));
        } catch (const std::exception& e) {
            failure.record("actor " + std::to_string(k) + " (seed " + std::to_string(explorer.seed()) +
                           ", episode " + std::to_string(explorer.episodes()) + ", last day " + day +
                           ") failed: " + e.what());
        }
    };

    if (runtime.deterministic) {
        actor_loop(0, [&](std::vector<Trajectory>&& b) {
            learner.consume(std::move(b));
            return learner.snapshot();
        });
    } else {
        Channel channel;
        std::vector<std::thread> workers;
        for (int k = 0; k < runtime.actors; ++k)
            workers.emplace_back([&, k] {
                actor_loop(k, [&](std::vector<Trajectory>&& b) {
                    channel.send(std::move(b));
                    return learner.snapshot();
                });
                channel.producer_done();
            });
        try {
            while (auto batch = channel.receive(runtime.actors)) {
                if (failure.failed) continue;
                learner.consume(std::move(*batch));
            }
        } catch (const std::exception& e) {
            failure.record(std::string("learner failed: ") + e.what());
            while (channel.receive(runtime.actors)) {
            }
        }
        for (auto& w : workers) w.join();
    }
    if (failure.failed) throw TrainingError(failure.message);
    learner.finish();
    return std::move(learner).result();
}

}  // namespace cid
