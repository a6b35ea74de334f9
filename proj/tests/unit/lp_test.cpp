#include "cidlab/lp.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace cid;

TEST(Simplex, SmallMaximization) {
    // max 3x + 5y, x <= 4, 2y <= 12, 3x + 2y <= 18  -> (2, 6), 36
    lp::Problem p;
    p.set_maximize(true);
    const int x = p.add_variable(0, lp::kInf, 3);
    const int y = p.add_variable(0, lp::kInf, 5);
    p.add_row({{x, 1}}, -lp::kInf, 4);
    p.add_row({{y, 2}}, -lp::kInf, 12);
    p.add_row({{x, 3}, {y, 2}}, -lp::kInf, 18);
    const auto r = lp::solve(p);
    ASSERT_EQ(r.status, lp::Status::Optimal);
    EXPECT_NEAR(r.objective, 36.0, 1e-9);
    EXPECT_NEAR(r.x[x], 2.0, 1e-9);
    EXPECT_NEAR(r.x[y], 6.0, 1e-9);
}

TEST(Simplex, EqualityNeedsPhaseOne) {
    // min x + y s.t. x + 2y = 4, x - y >= 1, 0 <= x,y <= 10
    lp::Problem p;
    const int x = p.add_variable(0, 10, 1);
    const int y = p.add_variable(0, 10, 1);
    p.add_row({{x, 1}, {y, 2}}, 4, 4);
    p.add_row({{x, 1}, {y, -1}}, 1, lp::kInf);
    const auto r = lp::solve(p);
    ASSERT_EQ(r.status, lp::Status::Optimal);
    EXPECT_NEAR(r.x[x] + 2 * r.x[y], 4.0, 1e-9);
    EXPECT_NEAR(r.objective, 2.0 + 1.0, 1e-9);  // x = 2, y = 1
}

TEST(Simplex, DetectsInfeasible) {
    lp::Problem p;
    const int x = p.add_variable(0, 1, 1);
    p.add_row({{x, 1}}, 2, 3);
    EXPECT_EQ(lp::solve(p).status, lp::Status::Infeasible);
}

TEST(Simplex, DetectsUnbounded) {
    lp::Problem p;
    p.set_maximize(true);
    const int x = p.add_variable(0, lp::kInf, 1);
    const int y = p.add_variable(0, lp::kInf, 0);
    p.add_row({{x, 1}, {y, -1}}, -lp::kInf, 1);
    EXPECT_EQ(lp::solve(p).status, lp::Status::Unbounded);
}

TEST(Simplex, FreeVariableAndBoundFlip) {
    // min -x + z, x in [0, 3], z free, z >= x - 5, z >= -x
    lp::Problem p;
    const int x = p.add_variable(0, 3, -1);
    const int z = p.add_variable(-lp::kInf, lp::kInf, 1);
    p.add_row({{z, 1}, {x, -1}}, -5, lp::kInf);
    p.add_row({{z, 1}, {x, 1}}, 0, lp::kInf);
    const auto r = lp::solve(p);
    ASSERT_EQ(r.status, lp::Status::Optimal);
    EXPECT_NEAR(r.objective, -5.0, 1e-9);  // flat on x in [2.5, 3]
}

// Box-constrained random LPs against brute-force vertex enumeration in 2D.
TEST(Simplex, RandomTwoDimensionalAgainstEnumeration) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (int trial = 0; trial < 300; ++trial) {
        lp::Problem p;
        p.set_maximize(true);
        const double cx = u(rng), cy = u(rng);
        p.add_variable(-2, 2, cx);
        p.add_variable(-2, 2, cy);
        struct Half { double a, b, hi; };
        std::vector<Half> halves{{1, 0, 2}, {-1, 0, 2}, {0, 1, 2}, {0, -1, 2}};
        for (int k = 0; k < 4; ++k) {
            Half h{u(rng), u(rng), std::abs(u(rng)) + 0.1};  // origin stays feasible
            halves.push_back(h);
            p.add_row({{0, h.a}, {1, h.b}}, -lp::kInf, h.hi);
        }
        double best = -1e300;
        for (std::size_t i = 0; i < halves.size(); ++i)
            for (std::size_t j = i + 1; j < halves.size(); ++j) {
                const double det = halves[i].a * halves[j].b - halves[i].b * halves[j].a;
                if (std::abs(det) < 1e-12) continue;
                const double x = (halves[i].hi * halves[j].b - halves[i].b * halves[j].hi) / det;
                const double y = (halves[i].a * halves[j].hi - halves[i].hi * halves[j].a) / det;
                bool ok = true;
                for (const auto& h : halves) ok = ok && h.a * x + h.b * y <= h.hi + 1e-9;
                if (ok) best = std::max(best, cx * x + cy * y);
            }
        const auto r = lp::solve(p);
        ASSERT_EQ(r.status, lp::Status::Optimal);
        EXPECT_NEAR(r.objective, best, 1e-7) << "trial " << trial;
        EXPECT_LE(p.max_violation(r.x), 1e-9);
    }
}

TEST(Simplex, DumpListsRows) {
    lp::Problem p;
    const int x = p.add_variable(0, 1, 2);
    p.add_row({{x, 1}}, 0, 1);
    const auto text = p.dump();
    EXPECT_NE(text.find("var 0 0 1 2"), std::string::npos);
    EXPECT_NE(text.find("row 0 0 1 0:1"), std::string::npos);
}

TEST(Simplex, LexicographicStaysOnOptimalFace) {
    // max x + y, x + y <= 1: every split is optimal; then min 2x + y.
    lp::Problem p;
    p.set_maximize(true);
    const int x = p.add_variable(0, 1, 1);
    const int y = p.add_variable(0, 1, 1);
    p.add_row({{x, 1}, {y, 1}}, -lp::kInf, 1);
    const auto r = lp::solve_lexicographic(p, {2.0, 1.0});
    ASSERT_EQ(r.status, lp::Status::Optimal);
    EXPECT_EQ(r.objective, 1.0);
    EXPECT_EQ(r.x[x], 0.0);
    EXPECT_EQ(r.x[y], 1.0);
}
