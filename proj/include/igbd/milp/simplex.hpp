#pragma once

#include <cstdint>
#include <vector>

#include "igbd/milp/linear_program.hpp"

namespace igbd::milp {

enum class LpStatus { kOptimal, kInfeasible, kUnbounded, kIterationLimit };

std::string to_string(LpStatus s);

enum class VarStatus : std::uint8_t { kBasic, kAtLower, kAtUpper, kFree };

// Variables are numbered structural first (j < n), then one slack per row
// (n + i). A basis is reusable across solves of the same matrix with
// different bounds, which is how branch-and-bound warm-starts children.
struct Basis {
  std::vector<int> basic;
  std::vector<VarStatus> status;
  bool empty() const { return basic.empty() && status.empty(); }
};

struct LpOptions {
  double feasibility_tol = 1e-9;
  double optimality_tol = 1e-9;
  double pivot_tol = 1e-9;
  long max_iterations = 500000;
  // Consecutive degenerate pivots before switching to Bland's rule.
  long bland_after_degenerate = 1000;
  int refactor_interval = 64;
  bool scale = true;
};

struct LpSolution {
  LpStatus status = LpStatus::kIterationLimit;
  double value = 0.0;
  std::vector<double> x;
  // Derivative of the optimal value with respect to each row's rhs.
  std::vector<double> row_duals;
  std::vector<double> reduced_costs;
  long pivots = 0;
  Basis basis;
};

// Bounded-variable revised simplex. The constraint matrix is scaled and
// stored once; solve() may then be called repeatedly with different
// variable bounds.
class SimplexSolver {
 public:
  explicit SimplexSolver(const LinearProgram& lp, LpOptions options = {});

  LpSolution solve() const { return solve(lp_.bounds); }
  LpSolution solve(const std::vector<VarBounds>& bounds,
                   const Basis* warm_start = nullptr) const;

  const LinearProgram& lp() const { return lp_; }

 private:
  friend class SimplexRun;

  struct Column {
    std::vector<int> rows;
    std::vector<double> values;
  };

  LinearProgram lp_;
  LpOptions options_;
  int n_ = 0;
  int m_ = 0;
  std::vector<double> col_scale_;
  std::vector<double> row_scale_;
  std::vector<double> cost_;
  std::vector<double> rhs_;
  std::vector<Column> cols_;
  double cost_norm_ = 1.0;
};

LpSolution solve_lp(const LinearProgram& lp, const LpOptions& options = {});

}  // namespace igbd::milp
