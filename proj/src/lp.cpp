#include "cidlab/lp.hpp"

#include "cidlab/types.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace cid::lp {

int Problem::add_variable(double lo, double hi, double cost) {
    if (lo > hi) throw ValidationError("variable lower bound exceeds upper bound");
    cost_.push_back(cost);
    col_lo_.push_back(lo);
    col_hi_.push_back(hi);
    return n_variables() - 1;
}

int Problem::add_row(std::vector<std::pair<int, double>> coefficients, double lo, double hi) {
    if (lo > hi) throw ValidationError("row lower bound exceeds upper bound");
    for (const auto& [j, a] : coefficients)
        if (j < 0 || j >= n_variables()) throw ValidationError("row references unknown variable");
    rows_.push_back(std::move(coefficients));
    row_lo_.push_back(lo);
    row_hi_.push_back(hi);
    return n_rows() - 1;
}

void Problem::set_bounds(int var, double lo, double hi) {
    if (lo > hi) throw ValidationError("variable lower bound exceeds upper bound");
    col_lo_.at(static_cast<std::size_t>(var)) = lo;
    col_hi_.at(static_cast<std::size_t>(var)) = hi;
}

double Problem::objective_at(const std::vector<double>& x) const {
    double z = 0.0;
    for (std::size_t j = 0; j < cost_.size(); ++j) z += cost_[j] * x[j];
    return z;
}

double Problem::max_violation(const std::vector<double>& x) const {
    double worst = 0.0;
    for (std::size_t j = 0; j < cost_.size(); ++j) {
        worst = std::max(worst, col_lo_[j] - x[j]);
        worst = std::max(worst, x[j] - col_hi_[j]);
    }
    for (std::size_t i = 0; i < rows_.size(); ++i) {
        double ax = 0.0;
        for (const auto& [j, a] : rows_[i]) ax += a * x[static_cast<std::size_t>(j)];
        worst = std::max(worst, row_lo_[i] - ax);
        worst = std::max(worst, ax - row_hi_[i]);
    }
    return worst;
}

std::string Problem::dump() const {
    std::ostringstream os;
    os.precision(17);
    os << (maximize_ ? "max" : "min") << ' ' << n_variables() << ' ' << n_rows() << '\n';
    for (int j = 0; j < n_variables(); ++j) os << "var " << j << ' ' << col_lo(j) << ' ' << col_hi(j) << ' ' << cost(j) << '\n';
    for (int i = 0; i < n_rows(); ++i) {
        os << "row " << i << ' ' << row_lo(i) << ' ' << row_hi(i);
        for (const auto& [j, a] : row(i)) os << ' ' << j << ':' << a;
        os << '\n';
    }
    return os.str();
}

const char* to_string(Status s) {
    switch (s) {
        case Status::Optimal: return "optimal";
        case Status::Infeasible: return "infeasible";
        case Status::Unbounded: return "unbounded";
        case Status::IterationLimit: return "iteration limit";
    }
    return "?";
}

namespace {

// Tableau over [structural | row activities | artificials] for the system
//   A x - r + diag(sigma) w = 0.
class Tableau {
public:
    Tableau(const Problem& p, const Options& opt) : opt_(opt) {
        n_ = p.n_variables();
        m_ = p.n_rows();
        cols_ = n_ + 2 * m_;
        t_.assign(static_cast<std::size_t>(m_) * static_cast<std::size_t>(cols_), 0.0);
        lo_.assign(static_cast<std::size_t>(cols_), 0.0);
        hi_.assign(static_cast<std::size_t>(cols_), 0.0);
        x_.assign(static_cast<std::size_t>(cols_), 0.0);
        basic_.assign(static_cast<std::size_t>(cols_), -1);
        head_.assign(static_cast<std::size_t>(m_), 0);

        for (int j = 0; j < n_; ++j) {
            lo_[j] = p.col_lo(j);
            hi_[j] = p.col_hi(j);
            x_[j] = std::isfinite(lo_[j]) ? lo_[j] : (std::isfinite(hi_[j]) ? hi_[j] : 0.0);
        }
        for (int i = 0; i < m_; ++i) {
            const int r = n_ + i;
            const int w = n_ + m_ + i;
            lo_[r] = p.row_lo(i);
            hi_[r] = p.row_hi(i);
            double ax = 0.0;
            for (const auto& [j, a] : p.row(i)) {
                at(i, j) += a;
                ax += a * x_[j];
            }
            const double target = std::clamp(ax, lo_[r], hi_[r]);
            if (target == ax) {
                // Row activity basic: the row is already satisfied.
                scale_row(i, -1.0);
                at(i, r) = 1.0;
                x_[r] = ax;
                set_basic(i, r);
                lo_[w] = hi_[w] = 0.0;
            } else {
                x_[r] = target;
                const double sigma = target - ax > 0 ? 1.0 : -1.0;
                at(i, r) = -1.0;
                scale_row(i, sigma);
                at(i, w) = 1.0;
                x_[w] = std::abs(target - ax);
                lo_[w] = 0.0;
                hi_[w] = kInf;
                set_basic(i, w);
                needs_phase1_ = true;
            }
        }
        max_iter_ = opt.max_iterations > 0 ? opt.max_iterations : 50 * (m_ + cols_) + 1000;
    }

    Status run(std::vector<double> cost) {
        cost.resize(static_cast<std::size_t>(cols_), 0.0);
        cost_ = std::move(cost);
        price_all();
        int degenerate = 0;
        for (;;) {
            if (iterations_ >= max_iter_) return Status::IterationLimit;
            const bool bland = degenerate >= opt_.degenerate_streak_for_bland;
            int enter = -1;
            double best = 0.0;
            int dir = 0;
            for (int j = 0; j < cols_; ++j) {
                if (basic_[j] >= 0 || lo_[j] == hi_[j]) continue;
                const double d = d_[j];
                int want = 0;
                if (x_[j] <= lo_[j] && d < -opt_.optimality_tolerance) want = 1;
                else if (x_[j] >= hi_[j] && d > opt_.optimality_tolerance) want = -1;
                else if (x_[j] > lo_[j] && x_[j] < hi_[j] && std::abs(d) > opt_.optimality_tolerance) want = d < 0 ? 1 : -1;
                if (want == 0) continue;
                if (bland) { enter = j; dir = want; break; }
                if (std::abs(d) > best) { best = std::abs(d); enter = j; dir = want; }
            }
            if (enter < 0) return Status::Optimal;

            // Ratio test.
            double theta = hi_[enter] - lo_[enter];
            int leave_row = -1;
            double leave_pivot = 0.0;
            for (int i = 0; i < m_; ++i) {
                const double a = at(i, enter) * dir;
                if (std::abs(a) <= opt_.pivot_tolerance) continue;
                const int b = head_[i];
                double step;
                if (a > 0) {
                    if (!std::isfinite(lo_[b])) continue;
                    step = std::max(0.0, (x_[b] - lo_[b]) / a);
                } else {
                    if (!std::isfinite(hi_[b])) continue;
                    step = std::max(0.0, (hi_[b] - x_[b]) / -a);
                }
                if (step < theta - 1e-12) {
                    theta = step;
                    leave_row = i;
                    leave_pivot = a;
                } else if (step <= theta + 1e-12 && leave_row >= 0 &&
                           (bland ? head_[i] < head_[leave_row] : std::abs(a) > std::abs(leave_pivot))) {
                    theta = std::min(step, theta);
                    leave_row = i;
                    leave_pivot = a;
                }
            }
            if (!std::isfinite(theta)) return Status::Unbounded;

            ++iterations_;
            degenerate = theta <= 1e-12 ? degenerate + 1 : 0;
            x_[enter] += dir * theta;
            for (int i = 0; i < m_; ++i) x_[head_[i]] -= dir * theta * at(i, enter);
            if (leave_row < 0) {
                // Bound flip of the entering variable.
                x_[enter] = dir > 0 ? hi_[enter] : lo_[enter];
                continue;
            }
            const int leaving = head_[leave_row];
            x_[leaving] = leave_pivot > 0 ? lo_[leaving] : hi_[leaving];
            pivot(leave_row, enter);
        }
    }

    // Pins every nonbasic column with a non-zero reduced cost, which leaves
    // exactly the optimal face of the last objective.
    void restrict_to_optimal_face() {
        for (int j = 0; j < cols_; ++j)
            if (basic_[j] < 0 && std::abs(d_[j]) > opt_.optimality_tolerance) lo_[j] = hi_[j] = x_[j];
    }

    bool needs_phase1() const { return needs_phase1_; }
    int n() const { return n_; }
    int m() const { return m_; }
    int iterations() const { return iterations_; }
    double value(int j) const { return x_[j]; }

    double artificial_sum() const {
        double s = 0.0;
        for (int i = 0; i < m_; ++i) s += std::abs(x_[n_ + m_ + i]);
        return s;
    }

    void fix_artificials() {
        for (int i = 0; i < m_; ++i) {
            const int w = n_ + m_ + i;
            lo_[w] = hi_[w] = 0.0;
            if (basic_[w] < 0) x_[w] = 0.0;
        }
    }

    // Basic values from the nonbasic ones: x_B = -sum_{j nonbasic} T[:, j] x_j.
    void refresh_basics() {
        for (int i = 0; i < m_; ++i) {
            double s = 0.0;
            for (int j = 0; j < cols_; ++j)
                if (basic_[j] < 0 && x_[j] != 0.0) s -= at(i, j) * x_[j];
            x_[head_[i]] = s;
        }
    }

    std::vector<double> phase1_costs() const {
        std::vector<double> c(static_cast<std::size_t>(cols_), 0.0);
        for (int i = 0; i < m_; ++i) c[n_ + m_ + i] = 1.0;
        return c;
    }

private:
    double& at(int i, int j) { return t_[static_cast<std::size_t>(i) * cols_ + j]; }
    double at(int i, int j) const { return t_[static_cast<std::size_t>(i) * cols_ + j]; }

    void scale_row(int i, double s) {
        for (int j = 0; j < cols_; ++j) at(i, j) *= s;
    }

    void set_basic(int row, int col) {
        head_[row] = col;
        basic_[col] = row;
    }

    void price_all() {
        d_.assign(static_cast<std::size_t>(cols_), 0.0);
        for (int j = 0; j < cols_; ++j) {
            double d = cost_[j];
            for (int i = 0; i < m_; ++i) d -= cost_[head_[i]] * at(i, j);
            d_[j] = d;
        }
    }

    void pivot(int r, int c) {
        const double p = at(r, c);
        double* row_r = &t_[static_cast<std::size_t>(r) * cols_];
        for (int j = 0; j < cols_; ++j) row_r[j] /= p;
        row_r[c] = 1.0;
        for (int i = 0; i < m_; ++i) {
            if (i == r) continue;
            double* row_i = &t_[static_cast<std::size_t>(i) * cols_];
            const double f = row_i[c];
            if (f == 0.0) continue;
            for (int j = 0; j < cols_; ++j) row_i[j] -= f * row_r[j];
            row_i[c] = 0.0;
        }
        const double f = d_[c];
        if (f != 0.0) {
            for (int j = 0; j < cols_; ++j) d_[j] -= f * row_r[j];
            d_[c] = 0.0;
        }
        basic_[head_[r]] = -1;
        set_basic(r, c);
    }

    Options opt_;
    int n_ = 0, m_ = 0, cols_ = 0;
    std::vector<double> t_, lo_, hi_, x_, cost_, d_;
    std::vector<int> basic_, head_;
    bool needs_phase1_ = false;
    int iterations_ = 0;
    int max_iter_ = 0;
};

}  // namespace

namespace {

Result run(const Problem& problem, const Options& options, const std::vector<double>* secondary) {
    for (int j = 0; j < problem.n_variables(); ++j)
        if (!(problem.col_lo(j) <= problem.col_hi(j))) return {Status::Infeasible, 0.0, {}, 0};

    Tableau tab(problem, options);
    Result res;
    if (tab.needs_phase1()) {
        const Status s = tab.run(tab.phase1_costs());
        tab.refresh_basics();
        if (s == Status::IterationLimit) {
            res.status = s;
            res.iterations = tab.iterations();
            return res;
        }
        const double scale = 1.0 + tab.m();
        if (tab.artificial_sum() > options.feasibility_tolerance * scale * 10.0) {
            res.status = Status::Infeasible;
            res.iterations = tab.iterations();
            return res;
        }
    }
    tab.fix_artificials();

    std::vector<double> cost(static_cast<std::size_t>(problem.n_variables()));
    for (int j = 0; j < problem.n_variables(); ++j) cost[j] = problem.maximize() ? -problem.cost(j) : problem.cost(j);
    res.status = tab.run(std::move(cost));
    tab.refresh_basics();
    if (res.status == Status::Optimal && secondary != nullptr) {
        tab.restrict_to_optimal_face();
        auto second = *secondary;
        second.resize(static_cast<std::size_t>(problem.n_variables()), 0.0);
        res.status = tab.run(std::move(second));
        tab.refresh_basics();
    }
    res.iterations = tab.iterations();
    res.x.resize(static_cast<std::size_t>(problem.n_variables()));
    for (int j = 0; j < problem.n_variables(); ++j) res.x[j] = tab.value(j);
    res.objective = problem.objective_at(res.x);
    return res;
}

}  // namespace

Result solve(const Problem& problem, const Options& options) { return run(problem, options, nullptr); }

Result solve_lexicographic(const Problem& problem, const std::vector<double>& secondary_cost, const Options& options) {
    return run(problem, options, &secondary_cost);
}

}  // namespace cid::lp
