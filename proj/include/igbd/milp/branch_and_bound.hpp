#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "igbd/milp/linear_program.hpp"
#include "igbd/milp/simplex.hpp"

namespace igbd::milp {

// Relative gap between an incumbent value v and a dual bound b (b <= v for
// minimization): (v - b) / max(|v|, 1e-10), +inf without an incumbent.
double relative_gap(std::optional<double> incumbent, double bound);

inline constexpr double kGapDenominatorFloor = 1e-10;
inline constexpr double kIntegralityTol = 1e-6;

enum class BranchingRule {
  kMostFractional,
  // Uniformly random fractional variable, drawn from the control's seed.
  kRandomFractional,
};

struct MilpSolveControl {
  double gap_tolerance = 0.0;
  std::optional<long> node_limit;
  // Budget on the total number of simplex pivots across all nodes.
  std::optional<long> work_limit;
  BranchingRule branching_rule = BranchingRule::kMostFractional;
  std::uint64_t seed = 0;
  // Keep every (incumbent, bound) pair observed during the search.
  bool record_progress = false;
  LpOptions lp_options{};
};

enum class MilpStatus { kOptimal, kGapReached, kInfeasible, kUnbounded, kLimitHit };

std::string to_string(MilpStatus s);

struct BoundSample {
  long node = 0;
  double incumbent = kInf;
  double bound = -kInf;
};

struct MilpSolution {
  MilpStatus status = MilpStatus::kInfeasible;
  std::optional<std::vector<double>> incumbent_x;
  double incumbent_value = kInf;
  double best_bound = -kInf;
  double realized_gap = kInf;
  long nodes_explored = 0;
  long simplex_pivots = 0;
  double cpu_time = 0.0;
  std::vector<BoundSample> progress;

  bool has_incumbent() const { return incumbent_x.has_value(); }
};

// Best-bound-first branch-and-bound over LP relaxations, stopping as soon as
// the relative gap reaches control.gap_tolerance. best_bound stays a valid
// lower bound on the MILP optimum even on early termination.
MilpSolution branch_and_bound(const MilpModel& model, const MilpSolveControl& control = {});

}  // namespace igbd::milp
