#include "igbd/gbd/igbd.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "igbd/util/cpu_timer.hpp"

namespace igbd::gbd {

double update_true_lower_bound(double tlb_prev, const milp::MilpSolution& master) {
  return std::max(tlb_prev, master.best_bound);
}

double benders_gap(double ub, double tlb) {
  if (!std::isfinite(tlb) || !std::isfinite(ub)) return milp::kInf;
  return std::max(0.0, (ub - tlb) / std::max(std::abs(ub), milp::kGapDenominatorFloor));
}

IgbdSession::IgbdSession(DecomposedProblem& problem, IgbdOptions options)
    : problem_(problem), options_(std::move(options)) {
  if (!(options_.eps_tol > 0.0)) throw std::invalid_argument("eps_tol must be positive");
  if (options_.t_max < 1) throw std::invalid_argument("t_max must be at least 1");
  reset();
}

void IgbdSession::reset() {
  master_ = problem_.base_master();
  master_.validate();
  cuts_.clear();
  trace_ = SolveTrace{};
  trace_.instance_id = problem_.instance_id();
  trace_.final_objective = milp::kInf;
  ub_ = milp::kInf;
  tlb_ = -milp::kInf;
  done_ = false;
}

double IgbdSession::gap() const {
  if (trace_.records.empty()) return 1.0;
  return trace_.records.back().gap;
}

const IterationRecord* IgbdSession::last_record() const {
  return trace_.records.empty() ? nullptr : &trace_.records.back();
}

const IterationRecord& IgbdSession::step(double tol) {
  if (done_) throw std::logic_error("step called on a finished iGBD session");
  IterationRecord rec;
  rec.l = iteration() + 1;
  rec.tol = tol;

  auto control = options_.master_control;
  control.gap_tolerance = tol;
  const auto sol = milp::branch_and_bound(master_, control);
  rec.realized = sol.realized_gap;
  rec.master_value = sol.incumbent_value;
  rec.master_bound = sol.best_bound;
  rec.master_cpu = sol.cpu_time;
  rec.master_nodes = sol.nodes_explored;
  rec.master_pivots = sol.simplex_pivots;
  rec.master_status = milp::to_string(sol.status);

  auto finish = [&](const std::string& why) -> const IterationRecord& {
    rec.ub = ub_;
    rec.tlb = tlb_;
    rec.gap = benders_gap(ub_, tlb_);
    trace_.t_mp += rec.master_cpu;
    trace_.t_total += rec.master_cpu + rec.max_subproblem_cpu;
    trace_.records.push_back(rec);
    trace_.infeasible = true;
    trace_.diagnostic = why;
    done_ = true;
    return trace_.records.back();
  };

  if (!sol.has_incumbent()) {
    return finish("master returned no incumbent (" + rec.master_status + ")");
  }
  tlb_ = update_true_lower_bound(tlb_, sol);

  const auto& x = *sol.incumbent_x;
  double total = problem_.first_stage_cost(x);
  for (const auto& q : problem_.queries(x)) {
    const auto ans = problem_.evaluate(q);
    rec.max_subproblem_cpu = std::max(rec.max_subproblem_cpu, ans.cpu_time);
    if (!ans.feasible) {
      return finish("subproblem " + std::to_string(q.subproblem_id) + " infeasible: " + ans.diagnostic);
    }
    total += ans.value;
    for (int target : problem_.cut_targets(q.subproblem_id)) {
      BendersCut cut{target, ans.value, ans.slope, q.point, rec.l};
      add_cut(master_, problem_, cut);
      cuts_.push_back(std::move(cut));
      ++rec.cuts_added;
    }
  }
  if (total < ub_) {
    ub_ = total;
    trace_.final_objective = total;
    trace_.final_x = x;
  }
  rec.ub = ub_;
  rec.tlb = tlb_;
  rec.gap = benders_gap(ub_, tlb_);
  trace_.t_mp += rec.master_cpu;
  trace_.t_total += rec.master_cpu + rec.max_subproblem_cpu;
  trace_.records.push_back(rec);

  if (rec.gap < options_.eps_tol) {
    trace_.converged = true;
    done_ = true;
  } else if (rec.l >= options_.t_max) {
    trace_.truncated = true;
    done_ = true;
  }
  return trace_.records.back();
}

SolveTrace run_igbd(DecomposedProblem& problem, TolerancePolicy& policy, const IgbdOptions& options,
                    std::uint64_t seed) {
  Rng rng(seed);
  IgbdSession session(problem, options);
  while (!session.done()) session.step(policy.choose(session, rng));
  SolveTrace trace = session.trace();
  trace.policy = policy.name();
  return trace;
}

}  // namespace igbd::gbd
