#include "cidlab/regressor.hpp"

#include "cidlab/types.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>

namespace cid {

std::string format_double(double x) {
    char buf[32];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
    if (ec != std::errc()) throw Error("cannot format number");
    return std::string(buf, end);
}

double parse_double(const std::string& token) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
    if (ec != std::errc() || ptr != token.data() + token.size())
        throw ValidationError("bad number '" + token + "'");
    return v;
}

namespace {

void check_shapes(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, const Eigen::MatrixXd& mask) {
    if (y.rows() != 2 || mask.rows() != 2 || y.cols() != x.cols() || mask.cols() != x.cols())
        throw ValidationError("regressor expects 2 x n targets and mask matching the inputs");
    if (x.cols() == 0) throw TrainingError("no samples to fit");
}

std::string read_token(std::istream& is) {
    std::string t;
    if (!(is >> t)) throw ValidationError("truncated regressor block");
    return t;
}

void expect(std::istream& is, const std::string& word) {
    const auto t = read_token(is);
    if (t != word) throw ValidationError("expected '" + word + "', got '" + t + "'");
}

long read_int(std::istream& is) {
    const auto t = read_token(is);
    long v = 0;
    auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || ptr != t.data() + t.size()) throw ValidationError("bad integer '" + t + "'");
    return v;
}

void write_values(std::ostream& os, const double* p, Eigen::Index n) {
    for (Eigen::Index i = 0; i < n; ++i) os << (i ? " " : "") << format_double(p[i]);
    os << '\n';
}

void read_values(std::istream& is, double* p, Eigen::Index n) {
    for (Eigen::Index i = 0; i < n; ++i) p[i] = parse_double(read_token(is));
}

struct Adam {
    double lr, b1 = 0.9, b2 = 0.999, eps = 1e-8;
    long t = 0;
    std::vector<Eigen::MatrixXd> mw, vw;
    std::vector<Eigen::VectorXd> mb, vb;

    Adam(double rate, const std::vector<Eigen::MatrixXd>& w, const std::vector<Eigen::VectorXd>& b) : lr(rate) {
        for (const auto& m : w) {
            mw.push_back(Eigen::MatrixXd::Zero(m.rows(), m.cols()));
            vw.push_back(mw.back());
        }
        for (const auto& v : b) {
            mb.push_back(Eigen::VectorXd::Zero(v.size()));
            vb.push_back(mb.back());
        }
    }

    void step(std::vector<Eigen::MatrixXd>& w, std::vector<Eigen::VectorXd>& b,
              const std::vector<Eigen::MatrixXd>& gw, const std::vector<Eigen::VectorXd>& gb) {
        ++t;
        const double c1 = 1.0 - std::pow(b1, static_cast<double>(t));
        const double c2 = 1.0 - std::pow(b2, static_cast<double>(t));
        const double a = lr * std::sqrt(c2) / c1;
        for (std::size_t l = 0; l < w.size(); ++l) {
            mw[l] = b1 * mw[l] + (1 - b1) * gw[l];
            vw[l] = b2 * vw[l] + (1 - b2) * gw[l].cwiseAbs2();
            w[l].array() -= a * mw[l].array() / (vw[l].array().sqrt() + eps);
            mb[l] = b1 * mb[l] + (1 - b1) * gb[l];
            vb[l] = b2 * vb[l] + (1 - b2) * gb[l].cwiseAbs2();
            b[l].array() -= a * mb[l].array() / (vb[l].array().sqrt() + eps);
        }
    }
};

}  // namespace

Eigen::MatrixXd Regressor::predict_batch(const Eigen::MatrixXd& inputs) const {
    Eigen::MatrixXd out(2, inputs.cols());
    for (Eigen::Index j = 0; j < inputs.cols(); ++j) out.col(j) = predict(inputs.col(j));
    return out;
}

// --- MLP -------------------------------------------------------------------

void MlpRegressor::fit(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, const Eigen::MatrixXd& mask,
                       std::uint64_t seed) {
    check_shapes(x, y, mask);
    if (cfg_.hidden < 1 || cfg_.layers < 1 || cfg_.epochs < 1 || cfg_.batch < 1 || !(cfg_.learning_rate > 0))
        throw ValidationError("invalid network hyperparameters");
    const Eigen::Index d = x.rows();
    const Eigen::Index n = x.cols();
    std::mt19937_64 rng(seed);

    for (int k = 0; k < 2; ++k) {
        double s = 0, ss = 0, m = 0;
        for (Eigen::Index j = 0; j < n; ++j)
            if (mask(k, j) > 0) {
                s += y(k, j);
                ss += y(k, j) * y(k, j);
                m += 1;
            }
        y_mean_[k] = m > 0 ? s / m : 0.0;
        const double var = m > 0 ? std::max(0.0, ss / m - y_mean_[k] * y_mean_[k]) : 0.0;
        // A constant target is reproduced exactly through the mean.
        y_scale_[k] = var > 1e-16 ? std::sqrt(var) : 0.0;
    }
    const Eigen::Array2d divisor = (y_scale_.array() > 0.0).select(y_scale_.array(), 1.0);
    Eigen::MatrixXd ys = (y.colwise() - y_mean_).array().colwise() / divisor;
    ys = ys.cwiseProduct(mask);

    w_.clear();
    b_.clear();
    Eigen::Index fan_in = d;
    for (int l = 0; l <= cfg_.layers; ++l) {
        const Eigen::Index out = l == cfg_.layers ? 2 : cfg_.hidden;
        const double lim = l == cfg_.layers ? std::sqrt(6.0 / static_cast<double>(fan_in + out))
                                            : std::sqrt(6.0 / static_cast<double>(fan_in));
        std::uniform_real_distribution<double> u(-lim, lim);
        Eigen::MatrixXd w(out, fan_in);
        for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = u(rng);
        w_.push_back(std::move(w));
        b_.push_back(Eigen::VectorXd::Zero(out));
        fan_in = out;
    }

    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::vector<Eigen::Index> train = order, valid;
    if (n >= 20 && cfg_.validation > 0) {
        std::shuffle(order.begin(), order.end(), rng);
        const auto nv = std::max<Eigen::Index>(1, std::llround(cfg_.validation * static_cast<double>(n)));
        valid.assign(order.begin(), order.begin() + nv);
        train.assign(order.begin() + nv, order.end());
        std::sort(valid.begin(), valid.end());
        std::sort(train.begin(), train.end());
    }
    const auto& monitor = valid.empty() ? train : valid;
    const Eigen::MatrixXd xm = x(Eigen::all, monitor);
    const Eigen::MatrixXd ym = ys(Eigen::all, monitor);
    const Eigen::MatrixXd mm = mask(Eigen::all, monitor);
    const double mm_sum = std::max(1.0, mm.sum());

    auto monitor_loss = [&] {
        return (forward(xm) - ym).cwiseProduct(mm).squaredNorm() / mm_sum;
    };

    Adam adam(cfg_.learning_rate, w_, b_);
    const std::size_t L = w_.size();
    std::vector<Eigen::MatrixXd> acts(L + 1), gw(L);
    std::vector<Eigen::VectorXd> gb(L);
    double best = std::numeric_limits<double>::infinity();
    auto best_w = w_;
    auto best_b = b_;
    int stale = 0;
    epochs_run_ = 0;
    const auto batch = static_cast<std::size_t>(cfg_.batch);

    for (int epoch = 0; epoch < cfg_.epochs; ++epoch) {
        std::shuffle(train.begin(), train.end(), rng);
        for (std::size_t start = 0; start < train.size(); start += batch) {
            const std::size_t stop = std::min(train.size(), start + batch);
            const std::vector<Eigen::Index> idx(train.begin() + static_cast<std::ptrdiff_t>(start),
                                                train.begin() + static_cast<std::ptrdiff_t>(stop));
            const Eigen::MatrixXd mb = mask(Eigen::all, idx);
            const double msum = mb.sum();
            if (msum <= 0) continue;
            acts[0] = x(Eigen::all, idx);
            for (std::size_t l = 0; l < L; ++l) {
                acts[l + 1] = (w_[l] * acts[l]).colwise() + b_[l];
                if (l + 1 < L) acts[l + 1] = acts[l + 1].cwiseMax(0.0);
            }
            Eigen::MatrixXd delta = 2.0 * (acts[L] - ys(Eigen::all, idx)).cwiseProduct(mb) / msum;
            for (std::size_t l = L; l-- > 0;) {
                gw[l] = delta * acts[l].transpose();
                gb[l] = delta.rowwise().sum();
                if (l > 0) delta = (w_[l].transpose() * delta).cwiseProduct((acts[l].array() > 0.0).cast<double>().matrix());
            }
            adam.step(w_, b_, gw, gb);
        }
        ++epochs_run_;
        const double loss = monitor_loss();
        if (!std::isfinite(loss)) throw TrainingError("network loss diverged");
        if (epoch == 0 || loss < best - 1e-9 * std::max(1.0, best)) {
            best = loss;
            best_w = w_;
            best_b = b_;
            stale = 0;
        } else if (++stale >= cfg_.patience) {
            break;
        }
    }
    w_ = std::move(best_w);
    b_ = std::move(best_b);
}

Eigen::MatrixXd MlpRegressor::forward(const Eigen::MatrixXd& x) const {
    Eigen::MatrixXd a = x;
    for (std::size_t l = 0; l < w_.size(); ++l) {
        Eigen::MatrixXd z = (w_[l] * a).colwise() + b_[l];
        a = l + 1 < w_.size() ? z.cwiseMax(0.0) : z;
    }
    return a;
}

Eigen::MatrixXd MlpRegressor::predict_batch(const Eigen::MatrixXd& x) const {
    if (w_.empty()) return Eigen::MatrixXd::Zero(2, x.cols());
    if (x.rows() != w_.front().cols()) throw ValidationError("input width does not match the network");
    return (forward(x).array().colwise() * y_scale_.array()).colwise() + y_mean_.array();
}

Eigen::Vector2d MlpRegressor::predict(const Eigen::Ref<const Eigen::VectorXd>& z) const {
    if (w_.empty()) return Eigen::Vector2d::Zero();
    if (z.size() != w_.front().cols()) throw ValidationError("input width does not match the network");
    Eigen::VectorXd a = z;
    for (std::size_t l = 0; l < w_.size(); ++l) {
        Eigen::VectorXd v = w_[l] * a + b_[l];
        a = l + 1 < w_.size() ? Eigen::VectorXd(v.cwiseMax(0.0)) : v;
    }
    return a.cwiseProduct(y_scale_) + y_mean_;
}

void MlpRegressor::save(std::ostream& os) const {
    os << "mlp " << cfg_.hidden << ' ' << cfg_.layers << ' ' << w_.size() << ' ' << epochs_run_ << '\n';
    os << "target " << format_double(y_mean_[0]) << ' ' << format_double(y_mean_[1]) << ' '
       << format_double(y_scale_[0]) << ' ' << format_double(y_scale_[1]) << '\n';
    for (std::size_t l = 0; l < w_.size(); ++l) {
        os << "layer " << w_[l].rows() << ' ' << w_[l].cols() << '\n';
        write_values(os, w_[l].data(), w_[l].size());
        write_values(os, b_[l].data(), b_[l].size());
    }
}

void MlpRegressor::load(std::istream& is) {
    expect(is, "mlp");
    cfg_.hidden = static_cast<int>(read_int(is));
    cfg_.layers = static_cast<int>(read_int(is));
    const long n_layers = read_int(is);
    epochs_run_ = static_cast<int>(read_int(is));
    if (n_layers != 0 && n_layers != cfg_.layers + 1) throw ValidationError("layer count mismatch");
    expect(is, "target");
    y_mean_[0] = parse_double(read_token(is));
    y_mean_[1] = parse_double(read_token(is));
    y_scale_[0] = parse_double(read_token(is));
    y_scale_[1] = parse_double(read_token(is));
    w_.clear();
    b_.clear();
    for (long l = 0; l < n_layers; ++l) {
        expect(is, "layer");
        const long rows = read_int(is), cols = read_int(is);
        if (rows < 1 || cols < 1) throw ValidationError("bad layer shape");
        Eigen::MatrixXd w(rows, cols);
        Eigen::VectorXd b(rows);
        read_values(is, w.data(), w.size());
        read_values(is, b.data(), b.size());
        if (l > 0 && cols != w_.back().rows()) throw ValidationError("layer shapes do not chain");
        w_.push_back(std::move(w));
        b_.push_back(std::move(b));
    }
    if (!w_.empty() && w_.back().rows() != 2) throw ValidationError("network must have two outputs");
}

// --- Tabular ---------------------------------------------------------------

void TabularRegressor::fit(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, const Eigen::MatrixXd& mask,
                           std::uint64_t) {
    check_shapes(x, y, mask);
    std::map<std::vector<double>, std::array<double, 4>> acc;  // sum0, n0, sum1, n1
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        std::vector<double> key(x.col(j).data(), x.col(j).data() + x.rows());
        auto& cell = acc[key];
        for (int k = 0; k < 2; ++k)
            if (mask(k, j) > 0) {
                cell[2 * k] += y(k, j);
                cell[2 * k + 1] += 1;
            }
    }
    table_.clear();
    for (const auto& [key, c] : acc)
        table_[key] = Eigen::Vector2d(c[1] > 0 ? c[0] / c[1] : 0.0, c[3] > 0 ? c[2] / c[3] : 0.0);
}

Eigen::Vector2d TabularRegressor::predict(const Eigen::Ref<const Eigen::VectorXd>& z) const {
    const std::vector<double> key(z.data(), z.data() + z.size());
    const auto it = table_.find(key);
    return it == table_.end() ? Eigen::Vector2d::Zero() : it->second;
}

void TabularRegressor::save(std::ostream& os) const {
    const std::size_t width = table_.empty() ? 0 : table_.begin()->first.size();
    os << "tabular " << table_.size() << ' ' << width << '\n';
    for (const auto& [key, q] : table_) {
        for (double v : key) os << format_double(v) << ' ';
        os << format_double(q[0]) << ' ' << format_double(q[1]) << '\n';
    }
}

void TabularRegressor::load(std::istream& is) {
    expect(is, "tabular");
    const long n = read_int(is), width = read_int(is);
    if (n < 0 || width < 0) throw ValidationError("bad table size");
    table_.clear();
    for (long i = 0; i < n; ++i) {
        std::vector<double> key(static_cast<std::size_t>(width));
        read_values(is, key.data(), width);
        Eigen::Vector2d q;
        read_values(is, q.data(), 2);
        table_[key] = q;
    }
}

RegressorFactory regressor_factory(const std::string& kind, const MlpConfig& mlp) {
    if (kind == "mlp") return [mlp] { return std::make_unique<MlpRegressor>(mlp); };
    if (kind == "tabular") return [] { return std::make_unique<TabularRegressor>(); };
    throw ValidationError("unknown regressor '" + kind + "'");
}

}  // namespace cid
