#pragma once

#include "cidlab/day.hpp"
#include "cidlab/episode.hpp"
#include "cidlab/regressor.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <random>
#include <string>
#include <vector>

namespace cid {

struct TrainConfig {
    int episodes_per_day = 20;   // E
    int refit_every = 10;        // ep, episodes between refits
    double epsilon_min = 0.1;    // range of the initial exploration rate
    double epsilon_max = 0.5;
    double decay = 0.0;          // per episode; 0 picks one from the budget
    std::size_t capacity = 100000;
    std::string regressor = "mlp";
    MlpConfig mlp;
    std::uint64_t seed = 1;

    // Throws ValidationError on out-of-range values.
    void check() const;
    // Decay that takes epsilon_max below 1e-3 after 80% of `episodes`.
    double decay_for(long episodes) const;
};

// Bounded FIFO of whole trajectories; the oldest is evicted first.
class TrajectoryStore {
public:
    explicit TrajectoryStore(std::size_t capacity = 100000);

    void push(Trajectory t);
    std::size_t size() const { return items_.size(); }
    std::size_t capacity() const { return capacity_; }
    std::size_t evicted() const { return evicted_; }
    bool empty() const { return items_.empty(); }
    const std::deque<Trajectory>& items() const { return items_; }
    bool operator==(const TrajectoryStore& o) const { return items_ == o.items_ && capacity_ == o.capacity_; }

private:
    std::deque<Trajectory> items_;
    std::size_t capacity_;
    std::size_t evicted_ = 0;
};

// Per-stage value functions Q_0..Q_{K-1}; Q_K is identically zero. Inputs
// are standardized with statistics frozen at fit time.
class QEnsemble {
public:
    QEnsemble() = default;
    QEnsemble(const QEnsemble& o);
    QEnsemble& operator=(const QEnsemble& o);
    QEnsemble(QEnsemble&&) noexcept = default;
    QEnsemble& operator=(QEnsemble&&) noexcept = default;

    int stages() const { return static_cast<int>(stages_.size()); }
    int history() const { return history_; }
    int width() const { return static_cast<int>(mean_.size()); }
    bool trained() const { return !stages_.empty(); }

    // (Q(Trade), Q(Idle)); zero for t == stages() and for an untrained ensemble.
    Eigen::Vector2d q(int t, const PseudoState& z) const;
    // Raw (unstandardized) column inputs.
    Eigen::MatrixXd q_batch(int t, const Eigen::MatrixXd& raw) const;

    const Eigen::VectorXd& mean() const { return mean_; }
    const Eigen::VectorXd& scale() const { return scale_; }
    const Regressor& stage(int t) const { return *stages_.at(static_cast<std::size_t>(t)); }

    void save(std::ostream& os) const;
    static QEnsemble load(std::istream& is);

private:
    friend QEnsemble fit_q(const TrajectoryStore&, const TrainConfig&, const RegressorFactory&, int, std::uint64_t);
    Eigen::MatrixXd standardize(const Eigen::MatrixXd& raw) const;

    int history_ = 0;
    Eigen::VectorXd mean_, scale_;
    std::vector<std::unique_ptr<Regressor>> stages_;
};

// Backward sweep t = K-1..0 over every quadruple in the store; stage t is
// fit to y = r + max_a Q_{t+1}(z', a). Throws TrainingError when a stage
// has no samples.
QEnsemble fit_q(const TrajectoryStore& store, const TrainConfig& config, const RegressorFactory& factory,
                int h_max, std::uint64_t seed);

// Epsilon-greedy choice; greedy ties go to Trade.
Action act(const QEnsemble& ensemble, int t, const PseudoState& z, double epsilon, std::mt19937_64& rng);

Policy greedy_policy(std::shared_ptr<const QEnsemble> ensemble);

// One exploring actor: its own random stream, initial epsilon drawn from the
// configured range, and epsilon_n = epsilon_0 * exp(-decay * n).
class Explorer {
public:
    Explorer(const TrainConfig& config, int actor, long budget);

    double epsilon() const;
    long episodes() const { return n_; }
    int actor() const { return actor_; }
    std::uint64_t seed() const { return seed_; }
    double epsilon0() const { return eps0_; }

    // Runs one episode on a uniformly drawn day.
    Trajectory next(const std::vector<DayRecord>& days, const EpisodeConfig& env, const QEnsemble& ensemble);

private:
    int actor_;
    std::uint64_t seed_;
    std::mt19937_64 rng_;
    double eps0_;
    double decay_;
    long n_ = 0;
};

using EpisodeLog = std::function<void(const Trajectory&, double epsilon)>;

// Runs `episodes` exploring episodes and appends them to the store.
void generate(Explorer& explorer, const std::vector<DayRecord>& days, const EpisodeConfig& env,
              const QEnsemble& ensemble, int episodes, TrajectoryStore& store, const EpisodeLog& log = {});

// Seed of the r-th refit.
std::uint64_t refit_seed(std::uint64_t master, long refit);

struct TrainResult {
    QEnsemble ensemble;
    TrajectoryStore store;
    long episodes = 0;
    int refits = 0;
};

// Sequential generation and fitting loop: E * |days| episodes in batches of
// ep, refitting after each batch.
TrainResult train_sequential(const std::vector<DayRecord>& days, const EpisodeConfig& env,
                             const TrainConfig& config, const EpisodeLog& log = {});

// Text model file: environment, one or more ensembles and free metadata.
inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
    EpisodeConfig env;
    std::vector<QEnsemble> policies;
    std::map<std::string, std::string> meta;
};

std::string format_checkpoint(const Checkpoint& c);
Checkpoint parse_checkpoint(const std::string& text);
void save_checkpoint(const Checkpoint& c, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace cid
