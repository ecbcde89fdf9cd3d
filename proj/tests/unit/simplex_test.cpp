#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>
#include <functional>

#include "igbd/milp/simplex.hpp"
#include "igbd/util/random.hpp"

namespace igbd::milp {
namespace {

// Brute-force LP oracle: every vertex of {rows, bounds} is the solution of n
// linearly independent active constraints; enumerate all such subsets.
double vertex_enumeration_min(const LinearProgram& lp) {
  const int n = lp.num_vars();
  struct Cons {
    std::vector<double> a;
    double b;
  };
  std::vector<Cons> cons;
  for (const auto& row : lp.rows) {
    Cons c{std::vector<double>(n, 0.0), row.rhs};
    for (const auto& e : row.entries) c.a[e.col] += e.value;
    cons.push_back(c);
  }
  for (int j = 0; j < n; ++j) {
    Cons lo{std::vector<double>(n, 0.0), lp.bounds[j].lo};
    lo.a[j] = 1.0;
    cons.push_back(lo);
    Cons hi{std::vector<double>(n, 0.0), lp.bounds[j].hi};
    hi.a[j] = 1.0;
    cons.push_back(hi);
  }
  double best = kInf;
  std::vector<int> pick;
  std::function<void(int)> rec = [&](int start) {
    if (static_cast<int>(pick.size()) == n) {
      Eigen::MatrixXd a(n, n);
      Eigen::VectorXd b(n);
      for (int r = 0; r < n; ++r) {
        for (int c = 0; c < n; ++c) a(r, c) = cons[pick[r]].a[c];
        b[r] = cons[pick[r]].b;
      }
      Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
      if (lu.rank() < n) return;
      Eigen::VectorXd x = lu.solve(b);
      std::vector<double> xv(x.data(), x.data() + n);
      if (lp.max_violation(xv) > 1e-9) return;
      best = std::min(best, lp.evaluate_objective(xv));
      return;
    }
    for (int k = start; k < static_cast<int>(cons.size()); ++k) {
      pick.push_back(k);
      rec(k + 1);
      pick.pop_back();
    }
  };
  rec(0);
  return best;
}

LinearProgram random_lp(Rng& rng, int n, int m) {
  LinearProgram lp;
  std::vector<double> x0(n);
  for (int j = 0; j < n; ++j) {
    const double hi = rng.uniform(1.0, 5.0);
    lp.add_variable(0.0, hi, rng.uniform(-3.0, 3.0));
    x0[j] = rng.uniform(0.1, 0.9) * hi;
  }
  for (int i = 0; i < m; ++i) {
    std::vector<Entry> e;
    double act = 0.0;
    for (int j = 0; j < n; ++j) {
      if (rng.uniform() < 0.6) {
        const double a = rng.uniform(-2.0, 2.0);
        e.push_back({j, a});
        act += a * x0[j];
      }
    }
    const double u = rng.uniform();
    if (i == 0) {
      lp.add_row(e, RowSense::kEqual, act);
    } else if (u < 0.6) {
      lp.add_row(e, RowSense::kLessEqual, act + rng.uniform(0.0, 1.0));
    } else {
      lp.add_row(e, RowSense::kGreaterEqual, act - rng.uniform(0.0, 1.0));
    }
  }
  return lp;
}

void expect_kkt(const LinearProgram& lp, const LpSolution& sol) {
  ASSERT_EQ(sol.status, LpStatus::kOptimal);
  EXPECT_LE(lp.max_violation(sol.x), 1e-8);
  ASSERT_EQ(sol.row_duals.size(), lp.rows.size());
  for (int i = 0; i < lp.num_rows(); ++i) {
    const double y = sol.row_duals[i];
    const double slack = lp.row_activity(i, sol.x) - lp.rows[i].rhs;
    EXPECT_NEAR(y * slack, 0.0, 1e-6) << "row " << i;
    if (lp.rows[i].sense == RowSense::kLessEqual) {
      EXPECT_LE(y, 1e-9);
    }
    if (lp.rows[i].sense == RowSense::kGreaterEqual) {
      EXPECT_GE(y, -1e-9);
    }
  }
  for (int j = 0; j < lp.num_vars(); ++j) {
    const double d = sol.reduced_costs[j];
    const double x = sol.x[j];
    const auto& b = lp.bounds[j];
    if (x > b.lo + 1e-7 && x < b.hi - 1e-7) {
      EXPECT_NEAR(d, 0.0, 1e-6) << "var " << j;
    }
    if (x <= b.lo + 1e-7 && x < b.hi - 1e-7) {
      EXPECT_GE(d, -1e-6);
    }
    if (x >= b.hi - 1e-7 && x > b.lo + 1e-7) {
      EXPECT_LE(d, 1e-6);
    }
  }
}

TEST(SolveLp, SingleActiveBound) {
  LinearProgram lp;
  lp.add_variable(0.0, 10.0, 1.0);
  lp.add_row({{0, 1.0}}, RowSense::kGreaterEqual, 3.0);
  const auto sol = solve_lp(lp);
  ASSERT_EQ(sol.status, LpStatus::kOptimal);
  EXPECT_NEAR(sol.value, 3.0, 1e-12);
  EXPECT_NEAR(sol.x[0], 3.0, 1e-12);
  EXPECT_NEAR(sol.row_duals[0], 1.0, 1e-12);
}

TEST(SolveLp, UnitSimplex) {
  LinearProgram lp;
  lp.add_variable(0.0, kInf, -1.0);
  lp.add_variable(0.0, kInf, -1.0);
  lp.add_row({{0, 1.0}, {1, 1.0}}, RowSense::kLessEqual, 1.0);
  const auto sol = solve_lp(lp);
  ASSERT_EQ(sol.status, LpStatus::kOptimal);
  EXPECT_NEAR(sol.value, -1.0, 1e-12);
  expect_kkt(lp, sol);
}

TEST(SolveLp, InfeasibleAndUnbounded) {
  LinearProgram infeasible;
  infeasible.add_variable(0.0, 1.0, 1.0);
  infeasible.add_row({{0, 1.0}}, RowSense::kGreaterEqual, 2.0);
  EXPECT_EQ(solve_lp(infeasible).status, LpStatus::kInfeasible);

  LinearProgram unbounded;
  unbounded.add_variable(0.0, kInf, -1.0);
  unbounded.add_variable(0.0, kInf, 0.0);
  unbounded.add_row({{0, 1.0}, {1, -1.0}}, RowSense::kLessEqual, 1.0);
  EXPECT_EQ(solve_lp(unbounded).status, LpStatus::kUnbounded);
}

TEST(SolveLp, FreeVariablesAndEqualities) {
  // min x + 2y, x - y = 1, x + y >= 3, x, y free -> x = 2, y = 1.
  LinearProgram lp;
  lp.add_variable(-kInf, kInf, 1.0);
  lp.add_variable(-kInf, kInf, 2.0);
  lp.add_row({{0, 1.0}, {1, -1.0}}, RowSense::kEqual, 1.0);
  lp.add_row({{0, 1.0}, {1, 1.0}}, RowSense::kGreaterEqual, 3.0);
  const auto sol = solve_lp(lp);
  ASSERT_EQ(sol.status, LpStatus::kOptimal);
  EXPECT_NEAR(sol.x[0], 2.0, 1e-10);
  EXPECT_NEAR(sol.x[1], 1.0, 1e-10);
  expect_kkt(lp, sol);
}

TEST(SolveLp, NoRows) {
  LinearProgram lp;
  lp.add_variable(-1.0, 4.0, 2.0);
  lp.add_variable(-1.0, 4.0, -1.0);
  const auto sol = solve_lp(lp);
  ASSERT_EQ(sol.status, LpStatus::kOptimal);
  EXPECT_DOUBLE_EQ(sol.value, -2.0 - 4.0);
}

TEST(SolveLp, MalformedModelThrows) {
  LinearProgram lp;
  lp.add_variable(0.0, 1.0, 1.0);
  lp.add_row({{3, 1.0}}, RowSense::kLessEqual, 1.0);
  EXPECT_THROW(solve_lp(lp), std::invalid_argument);
  LinearProgram inverted;
  inverted.add_variable(2.0, 1.0, 1.0);
  EXPECT_THROW(solve_lp(inverted), std::invalid_argument);
}

TEST(SolveLp, MatchesVertexEnumerationOnRandomLps) {
  Rng rng(20240611);
  for (int trial = 0; trial < 12; ++trial) {
    const auto lp = random_lp(rng, 8, 6);
    const double oracle = vertex_enumeration_min(lp);
    ASSERT_TRUE(std::isfinite(oracle));
    const auto sol = solve_lp(lp);
    EXPECT_NEAR(sol.value, oracle, 1e-7) << "trial " << trial;
    expect_kkt(lp, sol);
  }
}

TEST(SolveLp, WarmStartAfterBoundChangeMatchesColdSolve) {
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const auto lp = random_lp(rng, 10, 8);
    SimplexSolver solver(lp);
    const auto root = solver.solve();
    ASSERT_EQ(root.status, LpStatus::kOptimal);
    auto bounds = lp.bounds;
    const int j = static_cast<int>(rng.index(10));
    bounds[j].hi = std::max(bounds[j].lo, root.x[j] * 0.5);
    const auto warm = solver.solve(bounds, &root.basis);
    auto cold_lp = lp;
    cold_lp.bounds = bounds;
    const auto cold = solve_lp(cold_lp);
    ASSERT_EQ(warm.status, cold.status);
    if (cold.status == LpStatus::kOptimal) {
      EXPECT_NEAR(warm.value, cold.value, 1e-8);
      expect_kkt(cold_lp, warm);
    }
  }
}

TEST(SolveLp, DegenerateProblemTerminates) {
  // Many redundant constraints through the same vertex.
  LinearProgram lp;
  for (int j = 0; j < 4; ++j) lp.add_variable(0.0, kInf, -1.0 - 0.1 * j);
  for (int i = 0; i < 12; ++i) {
    std::vector<Entry> e;
    for (int j = 0; j < 4; ++j) e.push_back({j, 1.0 + ((i + j) % 3)});
    lp.add_row(e, RowSense::kLessEqual, 0.0);
  }
  lp.add_row({{0, 1.0}, {1, 1.0}, {2, 1.0}, {3, 1.0}}, RowSense::kLessEqual, 1.0);
  LpOptions opt;
  opt.bland_after_degenerate = 3;
  const auto sol = solve_lp(lp, opt);
  ASSERT_EQ(sol.status, LpStatus::kOptimal);
  EXPECT_NEAR(sol.value, 0.0, 1e-12);
}

}  // namespace
}  // namespace igbd::milp
