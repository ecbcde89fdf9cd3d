#include "igbd/milp/branch_and_bound.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <queue>

#include "igbd/util/cpu_timer.hpp"
#include "igbd/util/random.hpp"

namespace igbd::milp {

double relative_gap(std::optional<double> incumbent, double bound) {
  if (!incumbent.has_value() || !std::isfinite(*incumbent)) return kInf;
  const double v = *incumbent;
  if (!std::isfinite(bound)) return bound < 0 ? kInf : 0.0;
  const double gap = (v - bound) / std::max(std::abs(v), kGapDenominatorFloor);
  return std::max(gap, 0.0);
}

std::string to_string(MilpStatus s) {
  switch (s) {
    case MilpStatus::kOptimal: return "Optimal";
    case MilpStatus::kGapReached: return "GapReached";
    case MilpStatus::kInfeasible: return "Infeasible";
    case MilpStatus::kUnbounded: return "Unbounded";
    case MilpStatus::kLimitHit: return "LimitHit";
  }
  return "?";
}

namespace {

struct Node {
  double key = -kInf;  // parent's LP value: a lower bound for this subtree
  long order = 0;      // creation order, breaks key ties deterministically
  std::vector<VarBounds> int_bounds;
  std::shared_ptr<const Basis> warm;
};

struct NodeCompare {
  bool operator()(const Node& a, const Node& b) const {
    if (a.key != b.key) return a.key > b.key;
    return a.order > b.order;
  }
};

}  // namespace

MilpSolution branch_and_bound(const MilpModel& model, const MilpSolveControl& control) {
  model.validate();
  if (control.gap_tolerance < 0.0 || std::isnan(control.gap_tolerance)) {
    throw std::invalid_argument("gap_tolerance must be >= 0");
  }
  CpuTimer timer;
  MilpSolution out;

  const SimplexSolver solver(model.lp, control.lp_options);
  std::vector<int> int_vars;
  for (int j = 0; j < model.lp.num_vars(); ++j) {
    if (model.is_integer(j)) int_vars.push_back(j);
  }

  Node root;
  root.order = 0;
  root.int_bounds.reserve(int_vars.size());
  for (int j : int_vars) {
    // Integer variables only ever take integral bounds.
    root.int_bounds.push_back({std::ceil(model.lp.bounds[j].lo - kIntegralityTol),
                               std::floor(model.lp.bounds[j].hi + kIntegralityTol)});
  }

  std::priority_queue<Node, std::vector<Node>, NodeCompare> open;
  open.push(std::move(root));
  long next_order = 1;

  std::optional<double> incumbent;
  Rng rng(control.seed);
  std::vector<VarBounds> bounds = model.lp.bounds;
  bool unbounded = false;
  bool limit_hit = false;

  auto current_bound = [&]() {
    double b = open.empty() ? (incumbent ? *incumbent : kInf) : open.top().key;
    if (incumbent) b = std::min(b, *incumbent);
    return b;
  };
  auto record = [&]() {
    if (control.record_progress) {
      out.progress.push_back({out.nodes_explored, incumbent.value_or(kInf), current_bound()});
    }
  };

  while (!open.empty()) {
    if (incumbent && relative_gap(incumbent, current_bound()) <= control.gap_tolerance) break;
    if (control.node_limit && out.nodes_explored >= *control.node_limit) {
      limit_hit = true;
      break;
    }
    if (control.work_limit && out.simplex_pivots >= *control.work_limit) {
      limit_hit = true;
      break;
    }

    Node node = open.top();
    open.pop();

    if (incumbent) {
      const double prune_eps = 1e-9 * std::max(1.0, std::abs(*incumbent));
      if (node.key >= *incumbent - prune_eps) {
        record();
        continue;
      }
    }

    for (std::size_t k = 0; k < int_vars.size(); ++k) bounds[int_vars[k]] = node.int_bounds[k];
    const LpSolution lp = solver.solve(bounds, node.warm.get());
    ++out.nodes_explored;
    out.simplex_pivots += lp.pivots;

    if (lp.status == LpStatus::kUnbounded) {
      // An unbounded relaxation with integer-feasible rays: report rather
      // than branch forever.
      unbounded = true;
      break;
    }
    if (lp.status != LpStatus::kOptimal) {
      record();
      continue;
    }
    const double value = std::max(lp.value, node.key);
    if (incumbent && value >= *incumbent - 1e-9 * std::max(1.0, std::abs(*incumbent))) {
      record();
      continue;
    }

    // Pick the branching variable.
    int branch_k = -1;
    double best_frac = 0.0;
    std::vector<int> fractional;
    for (std::size_t k = 0; k < int_vars.size(); ++k) {
      const double xv = lp.x[int_vars[k]];
      const double frac = std::abs(xv - std::round(xv));
      if (frac <= kIntegralityTol) continue;
      fractional.push_back(static_cast<int>(k));
      if (frac > best_frac + 1e-12) {
        best_frac = frac;
        branch_k = static_cast<int>(k);
      }
    }
    if (control.branching_rule == BranchingRule::kRandomFractional && !fractional.empty()) {
      branch_k = fractional[rng.index(fractional.size())];
    }

    if (branch_k < 0) {
      incumbent = lp.value;
      std::vector<double> x = lp.x;
      for (int j : int_vars) x[j] = std::round(x[j]);
      out.incumbent_x = std::move(x);
      record();
      continue;
    }

    const int j = int_vars[branch_k];
    const double xv = lp.x[j];
    auto warm = std::make_shared<const Basis>(lp.basis);
    Node down{value, next_order++, node.int_bounds, warm};
    down.int_bounds[branch_k].hi = std::floor(xv);
    Node up{value, next_order++, std::move(node.int_bounds), warm};
    up.int_bounds[branch_k].lo = std::ceil(xv);
    if (down.int_bounds[branch_k].lo <= down.int_bounds[branch_k].hi) open.push(std::move(down));
    if (up.int_bounds[branch_k].lo <= up.int_bounds[branch_k].hi) open.push(std::move(up));
    record();
  }

  out.cpu_time = timer.seconds();
  if (unbounded) {
    out.status = MilpStatus::kUnbounded;
    out.best_bound = -kInf;
    out.incumbent_value = incumbent.value_or(kInf);
    out.realized_gap = kInf;
    return out;
  }
  out.incumbent_value = incumbent.value_or(kInf);
  out.best_bound = open.empty() ? (incumbent ? *incumbent : kInf) : current_bound();
  out.realized_gap = relative_gap(incumbent, out.best_bound);
  if (!incumbent) {
    out.status = open.empty() ? MilpStatus::kInfeasible : MilpStatus::kLimitHit;
  } else if (open.empty() || out.realized_gap == 0.0) {
    out.status = MilpStatus::kOptimal;
    out.realized_gap = 0.0;
    out.best_bound = std::min(out.best_bound, *incumbent);
  } else if (out.realized_gap <= control.gap_tolerance) {
    out.status = MilpStatus::kGapReached;
  } else {
    out.status = limit_hit ? MilpStatus::kLimitHit : MilpStatus::kGapReached;
  }
  return out;
}

}  // namespace igbd::milp
