#include "cidlab/fitted_q.hpp"

#include "cidlab/rng.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace cid {

// --- config ----------------------------------------------------------------

void TrainConfig::check() const {
    if (episodes_per_day < 1) throw ValidationError("episodes per day must be at least 1");
    if (refit_every < 1) throw ValidationError("episodes between refits must be at least 1");
    if (!(epsilon_min >= 0.0 && epsilon_min <= epsilon_max && epsilon_max <= 1.0))
        throw ValidationError("epsilon range must satisfy 0 <= min <= max <= 1");
    if (!(decay >= 0.0) || !std::isfinite(decay)) throw ValidationError("decay must be non-negative");
    if (capacity < 1) throw ValidationError("store capacity must be at least 1");
    regressor_factory(regressor, mlp);
}

double TrainConfig::decay_for(long episodes) const {
    if (decay > 0.0) return decay;
    if (epsilon_max <= 1e-3 || episodes < 1) return 0.0;
    return std::log(epsilon_max / 1e-3) / (0.8 * static_cast<double>(episodes));
}

// --- store -----------------------------------------------------------------

TrajectoryStore::TrajectoryStore(std::size_t capacity) : capacity_(capacity) {
    if (capacity_ < 1) throw ValidationError("store capacity must be at least 1");
}

void TrajectoryStore::push(Trajectory t) {
    if (items_.size() == capacity_) {
        items_.pop_front();
        ++evicted_;
    }
    items_.push_back(std::move(t));
}

// --- ensemble --------------------------------------------------------------

QEnsemble::QEnsemble(const QEnsemble& o) : history_(o.history_), mean_(o.mean_), scale_(o.scale_) {
    for (const auto& s : o.stages_) stages_.push_back(s->clone());
}

QEnsemble& QEnsemble::operator=(const QEnsemble& o) {
    if (this != &o) {
        QEnsemble copy(o);
        *this = std::move(copy);
    }
    return *this;
}

Eigen::MatrixXd QEnsemble::standardize(const Eigen::MatrixXd& raw) const {
    if (raw.rows() != mean_.size()) throw ValidationError("pseudo-state width does not match the model");
    return (raw.colwise() - mean_).array().colwise() / scale_.array();
}

Eigen::Vector2d QEnsemble::q(int t, const PseudoState& z) const {
    if (!trained() || t == stages()) return Eigen::Vector2d::Zero();
    if (t < 0 || t > stages()) throw ValidationError("stage out of range");
    if (z.h_max != history_) throw ValidationError("pseudo-state window does not match the model");
    const Eigen::Map<const Eigen::VectorXd> raw(z.values.data(), static_cast<Eigen::Index>(z.values.size()));
    if (raw.size() != mean_.size()) throw ValidationError("pseudo-state width does not match the model");
    const Eigen::VectorXd x = (raw - mean_).cwiseQuotient(scale_);
    return stages_[static_cast<std::size_t>(t)]->predict(x);
}

Eigen::MatrixXd QEnsemble::q_batch(int t, const Eigen::MatrixXd& raw) const {
    if (!trained() || t == stages()) return Eigen::MatrixXd::Zero(2, raw.cols());
    if (t < 0 || t > stages()) throw ValidationError("stage out of range");
    return stages_[static_cast<std::size_t>(t)]->predict_batch(standardize(raw));
}

namespace {

std::string next_token(std::istream& is, const char* what) {
    std::string t;
    if (!(is >> t)) throw ValidationError(std::string("truncated model: expected ") + what);
    return t;
}

void expect_token(std::istream& is, const std::string& word) {
    const auto t = next_token(is, word.c_str());
    if (t != word) throw ValidationError("model: expected '" + word + "', got '" + t + "'");
}

long next_int(std::istream& is, const char* what) {
    const auto t = next_token(is, what);
    try {
        std::size_t pos = 0;
        const long v = std::stol(t, &pos);
        if (pos != t.size()) throw std::invalid_argument(t);
        return v;
    } catch (const std::logic_error&) {
        throw ValidationError("model: bad integer '" + t + "' for " + what);
    }
}

}  // namespace

void QEnsemble::save(std::ostream& os) const {
    os << "ensemble " << stages() << ' ' << width() << ' ' << history_ << '\n';
    os << "mean";
    for (Eigen::Index i = 0; i < mean_.size(); ++i) os << ' ' << format_double(mean_[i]);
    os << "\nscale";
    for (Eigen::Index i = 0; i < scale_.size(); ++i) os << ' ' << format_double(scale_[i]);
    os << '\n';
    for (int t = 0; t < stages(); ++t) {
        os << "stage " << t << ' ' << stages_[static_cast<std::size_t>(t)]->kind() << '\n';
        stages_[static_cast<std::size_t>(t)]->save(os);
    }
}

QEnsemble QEnsemble::load(std::istream& is) {
    expect_token(is, "ensemble");
    QEnsemble e;
    const long k = next_int(is, "stage count");
    const long width = next_int(is, "width");
    e.history_ = static_cast<int>(next_int(is, "history"));
    if (k < 0 || width < 0) throw ValidationError("model: negative sizes");
    e.mean_.resize(width);
    e.scale_.resize(width);
    expect_token(is, "mean");
    for (long i = 0; i < width; ++i) e.mean_[i] = parse_double(next_token(is, "mean"));
    expect_token(is, "scale");
    for (long i = 0; i < width; ++i) e.scale_[i] = parse_double(next_token(is, "scale"));
    for (long t = 0; t < k; ++t) {
        expect_token(is, "stage");
        if (next_int(is, "stage index") != t) throw ValidationError("model: stages out of order");
        auto reg = regressor_factory(next_token(is, "regressor kind"))();
        reg->load(is);
        e.stages_.push_back(std::move(reg));
    }
    return e;
}

// --- fitting ---------------------------------------------------------------

QEnsemble fit_q(const TrajectoryStore& store, const TrainConfig& config, const RegressorFactory& factory,
                int h_max, std::uint64_t seed) {
    (void)config;
    if (store.empty()) throw TrainingError("stage 0 has no samples: the trajectory store is empty");
    const int K = store.items().front().steps();
    for (const auto& tr : store.items())
        if (tr.steps() != K || tr.observations.size() != static_cast<std::size_t>(K) + 1 ||
            tr.rewards.size() != static_cast<std::size_t>(K))
            throw TrainingError("trajectories in the store differ in length");
    if (K < 1) throw TrainingError("stage 0 has no samples: trajectories are empty");

    const auto n = static_cast<Eigen::Index>(store.size());
    // states[t] holds z_t for every trajectory, one column each.
    std::vector<Eigen::MatrixXd> states(static_cast<std::size_t>(K) + 1);
    Eigen::Index width = 0;
    for (int t = 0; t <= K; ++t) {
        Eigen::Index j = 0;
        for (const auto& tr : store.items()) {
            const auto z = tr.state(t, h_max);
            if (width == 0) width = static_cast<Eigen::Index>(z.values.size());
            if (static_cast<Eigen::Index>(z.values.size()) != width)
                throw TrainingError("pseudo-states differ in width");
            if (states[static_cast<std::size_t>(t)].size() == 0) states[static_cast<std::size_t>(t)].resize(width, n);
            states[static_cast<std::size_t>(t)].col(j++) =
                Eigen::Map<const Eigen::VectorXd>(z.values.data(), width);
        }
    }

    QEnsemble e;
    e.history_ = h_max;
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(width), sq = Eigen::VectorXd::Zero(width);
    for (int t = 0; t < K; ++t) {
        sum += states[static_cast<std::size_t>(t)].rowwise().sum();
        sq += states[static_cast<std::size_t>(t)].cwiseAbs2().rowwise().sum();
    }
    const double count = static_cast<double>(n) * K;
    e.mean_ = sum / count;
    e.scale_.resize(width);
    for (Eigen::Index i = 0; i < width; ++i) {
        const double var = std::max(0.0, sq[i] / count - e.mean_[i] * e.mean_[i]);
        e.scale_[i] = var > 1e-12 ? std::sqrt(var) : 1.0;
    }

    std::vector<std::unique_ptr<Regressor>> fitted(static_cast<std::size_t>(K));
    Eigen::MatrixXd next_value = Eigen::MatrixXd::Zero(1, n);  // max_a Q_{t+1}(z_{t+1}, a)
    for (int t = K - 1; t >= 0; --t) {
        Eigen::MatrixXd y = Eigen::MatrixXd::Zero(2, n), mask = Eigen::MatrixXd::Zero(2, n);
        Eigen::Index j = 0;
        for (const auto& tr : store.items()) {
            const int row = tr.actions[static_cast<std::size_t>(t)] == Action::Trade ? 0 : 1;
            y(row, j) = tr.rewards[static_cast<std::size_t>(t)] + next_value(0, j);
            mask(row, j) = 1.0;
            ++j;
        }
        auto reg = factory();
        const Eigen::MatrixXd x = e.standardize(states[static_cast<std::size_t>(t)]);
        reg->fit(x, y, mask, derive_seed(seed, static_cast<std::uint64_t>(t)));
        // z_t is the successor state of stage t - 1.
        if (t > 0) next_value = reg->predict_batch(x).colwise().maxCoeff();
        fitted[static_cast<std::size_t>(t)] = std::move(reg);
    }
    e.stages_ = std::move(fitted);
    return e;
}

Action act(const QEnsemble& ensemble, int t, const PseudoState& z, double epsilon, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    if (epsilon > 0.0 && u(rng) < epsilon) return (rng() & 1) ? Action::Idle : Action::Trade;
    const auto q = ensemble.q(t, z);
    return q[0] >= q[1] ? Action::Trade : Action::Idle;
}

Policy greedy_policy(std::shared_ptr<const QEnsemble> ensemble) {
    return [ensemble](int t, const PseudoState& z) {
        const auto q = ensemble->q(t, z);
        return q[0] >= q[1] ? Action::Trade : Action::Idle;
    };
}

// --- generation ------------------------------------------------------------

Explorer::Explorer(const TrainConfig& config, int actor, long budget)
    : actor_(actor), seed_(derive_seed(config.seed, static_cast<std::uint64_t>(actor))), rng_(seed_) {
    std::uniform_real_distribution<double> u(config.epsilon_min, config.epsilon_max);
    eps0_ = config.epsilon_min == config.epsilon_max ? config.epsilon_min : u(rng_);
    decay_ = config.decay_for(budget);
}

double Explorer::epsilon() const { return eps0_ * std::exp(-decay_ * static_cast<double>(n_)); }

Trajectory Explorer::next(const std::vector<DayRecord>& days, const EpisodeConfig& env, const QEnsemble& ensemble) {
    if (days.empty()) throw ValidationError("no days to simulate");
    std::uniform_int_distribution<std::size_t> pick(0, days.size() - 1);
    const auto& day = days[pick(rng_)];
    const double eps = epsilon();
    auto tr = run_episode(day, env, [&](int t, const PseudoState& z) { return act(ensemble, t, z, eps, rng_); });
    tr.actor = actor_;
    tr.index = n_++;
    return tr;
}

void generate(Explorer& explorer, const std::vector<DayRecord>& days, const EpisodeConfig& env,
              const QEnsemble& ensemble, int episodes, TrajectoryStore& store, const EpisodeLog& log) {
    for (int i = 0; i < episodes; ++i) {
        const double eps = explorer.epsilon();
        auto tr = explorer.next(days, env, ensemble);
        if (log) log(tr, eps);
        store.push(std::move(tr));
    }
}

std::uint64_t refit_seed(std::uint64_t master, long refit) {
    return derive_seed(derive_seed(master, 0x7265666974ULL), static_cast<std::uint64_t>(refit));
}

TrainResult train_sequential(const std::vector<DayRecord>& days, const EpisodeConfig& env,
                             const TrainConfig& config, const EpisodeLog& log) {
    config.check();
    if (days.empty()) throw ValidationError("training needs at least one day");
    const long budget = static_cast<long>(config.episodes_per_day) * static_cast<long>(days.size());
    const auto factory = regressor_factory(config.regressor, config.mlp);
    TrainResult out{QEnsemble{}, TrajectoryStore(config.capacity), 0, 0};
    Explorer explorer(config, 0, budget);
    while (out.episodes < budget) {
        const int batch = static_cast<int>(std::min<long>(config.refit_every, budget - out.episodes));
        generate(explorer, days, env, out.ensemble, batch, out.store, log);
        out.episodes += batch;
        out.ensemble = fit_q(out.store, config, factory, env.history, refit_seed(config.seed, out.refits));
        ++out.refits;
    }
    return out;
}

// --- checkpoint ------------------------------------------------------------

std::string format_checkpoint(const Checkpoint& c) {
    std::ostringstream os;
    const auto& cal = c.env.calendar.config();
    const auto& s = c.env.storage;
    os << "cidlab-model " << kCheckpointVersion << '\n';
    os << "calendar " << cal.n_products << ' ' << cal.product_minutes << ' ' << cal.first_delivery << ' '
       << cal.gate_open << ' ' << cal.gate_close_lead << ' ' << cal.trading_start << ' ' << cal.trading_step << ' '
       << cal.steps << '\n';
    os << "storage";
    for (double v : {s.soc_min, s.soc_max, s.c_min, s.c_max, s.g_min, s.g_max, s.eta, s.soc_init, s.soc_term})
        os << ' ' << format_double(v);
    os << '\n';
    os << "settlement " << to_string(c.env.settlement) << '\n';
    os << "history " << c.env.history << '\n';
    for (const auto& [k, v] : c.meta) {
        if (k.find_first_of(" \t\n") != std::string::npos || v.find('\n') != std::string::npos)
            throw ValidationError("metadata keys cannot contain blanks and values cannot contain newlines");
        os << "meta " << k << ' ' << v << '\n';
    }
    os << "policies " << c.policies.size() << '\n';
    for (const auto& p : c.policies) p.save(os);
    os << "end\n";
    return os.str();
}

Checkpoint parse_checkpoint(const std::string& text) {
    std::istringstream is(text);
    Checkpoint c;
    std::string magic;
    long version = 0;
    if (!(is >> magic >> version) || magic != "cidlab-model") throw ValidationError("not a model file");
    if (version != kCheckpointVersion)
        throw VersionError("model version " + std::to_string(version) + ", expected " +
                           std::to_string(kCheckpointVersion));
    expect_token(is, "calendar");
    CalendarConfig cal;
    for (int* f : {&cal.n_products, &cal.product_minutes, &cal.first_delivery, &cal.gate_open, &cal.gate_close_lead,
                   &cal.trading_start, &cal.trading_step, &cal.steps})
        *f = static_cast<int>(next_int(is, "calendar field"));
    c.env.calendar = MarketCalendar(cal);
    expect_token(is, "storage");
    auto& s = c.env.storage;
    for (double* f : {&s.soc_min, &s.soc_max, &s.c_min, &s.c_max, &s.g_min, &s.g_max, &s.eta, &s.soc_init,
                      &s.soc_term})
        *f = parse_double(next_token(is, "storage field"));
    s.check();
    expect_token(is, "settlement");
    const auto mode = next_token(is, "settlement");
    if (mode == "energy") c.env.settlement = Settlement::Energy;
    else if (mode == "power") c.env.settlement = Settlement::Power;
    else throw ValidationError("unknown settlement '" + mode + "'");
    expect_token(is, "history");
    c.env.history = static_cast<int>(next_int(is, "history"));
    std::string word = next_token(is, "policies");
    while (word == "meta") {
        const auto key = next_token(is, "meta key");
        std::string value;
        std::getline(is, value);
        if (!value.empty() && value.front() == ' ') value.erase(0, 1);
        c.meta[key] = value;
        word = next_token(is, "policies");
    }
    if (word != "policies") throw ValidationError("model: expected 'policies', got '" + word + "'");
    const long n = next_int(is, "policy count");
    for (long i = 0; i < n; ++i) c.policies.push_back(QEnsemble::load(is));
    expect_token(is, "end");
    return c;
}

void save_checkpoint(const Checkpoint& c, const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot write " + path.string());
    f << format_checkpoint(c);
    if (!f) throw Error("write failed for " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error("cannot read " + path.string());
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse_checkpoint(ss.str());
}

}  // namespace cid
