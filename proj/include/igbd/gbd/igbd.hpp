#pragma once

#include <cstdint>
#include <vector>

#include "igbd/gbd/policy.hpp"
#include "igbd/gbd/problem.hpp"
#include "igbd/gbd/trace.hpp"
#include "igbd/milp/branch_and_bound.hpp"

namespace igbd::gbd {

// max(TLB_prev, b).
double update_true_lower_bound(double tlb_prev, const milp::MilpSolution& master);

// (UB - TLB) / max(|UB|, 1e-10), clamped at 0; +inf while TLB is -inf.
double benders_gap(double ub, double tlb);

struct IgbdOptions {
  double eps_tol = 1e-3;
  int t_max = 50;
  // Applied to every master solve; gap_tolerance is overwritten per iteration.
  milp::MilpSolveControl master_control{};
};

// One iGBD run, advanced an iteration at a time so that an RL environment
// can choose each tolerance.
class IgbdSession {
 public:
  IgbdSession(DecomposedProblem& problem, IgbdOptions options);

  void reset();
  // Runs iteration l+1 with master gap tolerance tol.
  const IterationRecord& step(double tol);

  bool done() const { return done_; }
  int iteration() const { return static_cast<int>(trace_.records.size()); }
  // Benders gap after the latest iteration (1 before the first one).
  double gap() const;
  double upper_bound() const { return ub_; }
  double true_lower_bound() const { return tlb_; }
  const IterationRecord* last_record() const;
  const SolveTrace& trace() const { return trace_; }
  const std::vector<BendersCut>& cuts() const { return cuts_; }
  const IgbdOptions& options() const { return options_; }
  DecomposedProblem& problem() const { return problem_; }

 private:
  DecomposedProblem& problem_;
  IgbdOptions options_;
  milp::MilpModel master_;
  std::vector<BendersCut> cuts_;
  SolveTrace trace_;
  double ub_ = milp::kInf;
  double tlb_ = -milp::kInf;
  bool done_ = false;
};

SolveTrace run_igbd(DecomposedProblem& problem, TolerancePolicy& policy,
                    const IgbdOptions& options = {}, std::uint64_t seed = 0);

}  // namespace igbd::gbd
