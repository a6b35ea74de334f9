#pragma once

#include <limits>
#include <string>
#include <utility>
#include <vector>

// Dense bounded-variable primal simplex for the small linear programs behind
// the trade solver.
namespace cid::lp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct Options {
    double pivot_tolerance = 1e-9;
    double feasibility_tolerance = 1e-9;
    double optimality_tolerance = 1e-9;
    int degenerate_streak_for_bland = 30;
    int max_iterations = 0;  // 0: derived from problem size
};

//   minimize (or maximize) c'x  s.t.  row_lo <= A x <= row_hi,  col_lo <= x <= col_hi
class Problem {
public:
    int add_variable(double lo, double hi, double cost);
    int add_row(std::vector<std::pair<int, double>> coefficients, double lo, double hi);

    void set_maximize(bool m) { maximize_ = m; }
    void set_cost(int var, double cost) { cost_.at(static_cast<std::size_t>(var)) = cost; }
    void set_bounds(int var, double lo, double hi);

    int n_variables() const { return static_cast<int>(cost_.size()); }
    int n_rows() const { return static_cast<int>(row_lo_.size()); }
    bool maximize() const { return maximize_; }
    double cost(int j) const { return cost_[static_cast<std::size_t>(j)]; }
    double col_lo(int j) const { return col_lo_[static_cast<std::size_t>(j)]; }
    double col_hi(int j) const { return col_hi_[static_cast<std::size_t>(j)]; }
    double row_lo(int i) const { return row_lo_[static_cast<std::size_t>(i)]; }
    double row_hi(int i) const { return row_hi_[static_cast<std::size_t>(i)]; }
    const std::vector<std::pair<int, double>>& row(int i) const { return rows_[static_cast<std::size_t>(i)]; }

    double objective_at(const std::vector<double>& x) const;
    // Largest bound or row violation at x.
    double max_violation(const std::vector<double>& x) const;
    // Line-based text dump, one row per line, for offline replay.
    std::string dump() const;

private:
    bool maximize_ = false;
    std::vector<double> cost_, col_lo_, col_hi_;
    std::vector<double> row_lo_, row_hi_;
    std::vector<std::vector<std::pair<int, double>>> rows_;
};

enum class Status { Optimal, Infeasible, Unbounded, IterationLimit };

const char* to_string(Status s);

struct Result {
    Status status = Status::Infeasible;
    double objective = 0.0;
    std::vector<double> x;
    int iterations = 0;
};

Result solve(const Problem& problem, const Options& options = {});

// Solves `problem`, then minimizes `secondary_cost` over its optimal face.
Result solve_lexicographic(const Problem& problem, const std::vector<double>& secondary_cost,
                           const Options& options = {});

}  // namespace cid::lp
