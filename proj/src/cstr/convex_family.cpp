#include "igbd/cstr/convex_family.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "igbd/util/random.hpp"

namespace igbd::cstr {

ConvexFamilyInstance sample_convex_instance(int dim, std::uint64_t seed) {
  if (dim < 1 || dim > 12) throw std::invalid_argument("convex family supports 1..12 binaries");
  Rng rng(seed);
  ConvexFamilyInstance inst;
  inst.id = "convex-" + std::to_string(dim) + "-" + std::to_string(seed);
  for (int j = 0; j < dim; ++j) inst.y_cost.push_back(rng.uniform(0.5, 3.0));
  const int n_rows = 1 + static_cast<int>(rng.index(2));
  for (int r = 0; r < n_rows; ++r) {
    KnapsackRow row;
    double total = 0.0;
    for (int j = 0; j < dim; ++j) {
      row.weight.push_back(rng.uniform(1.0, 5.0));
      total += row.weight.back();
    }
    row.capacity = total * rng.uniform(0.3, 0.6);
    inst.rows.push_back(row);
  }
  const int n_sub = 2 + static_cast<int>(rng.index(2));
  for (int s = 0; s < n_sub; ++s) {
    ConvexSubproblem sp;
    sp.a = rng.uniform(1.0, 6.0);
    sp.b = rng.uniform(1.5, 4.0);
    sp.c = rng.uniform(1.0, 5.0);
    sp.d = rng.uniform(-1.0, 1.0);
    sp.u0 = rng.uniform(0.2, 1.5);
    for (int j = 0; j < dim; ++j) sp.g.push_back(rng.uniform() < 0.5 ? rng.uniform(0.2, 1.5) : 0.0);
    inst.subproblems.push_back(sp);
  }
  return inst;
}

ConvexOracleResult convex_oracle(const ConvexFamilyInstance& inst) {
  const int n = inst.num_binaries();
  ConvexOracleResult best;
  best.objective = milp::kInf;
  std::vector<int> y(n);
  for (long mask = 0; mask < (1L << n); ++mask) {
    for (int j = 0; j < n; ++j) y[j] = static_cast<int>((mask >> j) & 1);
    bool ok = true;
    for (const auto& row : inst.rows) {
      double lhs = 0.0;
      for (int j = 0; j < n; ++j) lhs += row.weight[j] * y[j];
      if (lhs > row.capacity + 1e-12) ok = false;
    }
    if (!ok) continue;
    double obj = 0.0;
    for (int j = 0; j < n; ++j) obj += inst.y_cost[j] * y[j];
    std::vector<double> theta;
    for (const auto& sp : inst.subproblems) {
      double cap = sp.u0;
      for (int j = 0; j < n; ++j) cap += sp.g[j] * y[j];
      cap = std::min(cap, inst.theta_max);
      const double t = std::clamp(sp.b - sp.d / (2.0 * sp.a), 0.0, cap);
      theta.push_back(t);
      obj += sp.value(t) + sp.d * t;
    }
    if (obj < best.objective) {
      best.objective = obj;
      best.y = y;
      best.theta = theta;
    }
  }
  return best;
}

ConvexFamilyProblem::ConvexFamilyProblem(ConvexFamilyInstance inst) : inst_(std::move(inst)) {
  const int n = inst_.num_binaries();
  for (int j = 0; j < n; ++j) master_.add_variable(0.0, 1.0, inst_.y_cost[j], milp::IntegerKind::kBinary);
  for (const auto& sp : inst_.subproblems) {
    theta_col_.push_back(master_.add_variable(0.0, inst_.theta_max, sp.d));
    const double peak = std::max(sp.value(0.0), sp.value(inst_.theta_max));
    eta_col_.push_back(master_.add_variable(sp.c, peak, 1.0));
  }
  for (const auto& row : inst_.rows) {
    std::vector<milp::Entry> e;
    for (int j = 0; j < n; ++j) e.push_back({j, row.weight[j]});
    master_.lp.add_row(e, milp::RowSense::kLessEqual, row.capacity);
  }
  for (std::size_t s = 0; s < inst_.subproblems.size(); ++s) {
    const auto& sp = inst_.subproblems[s];
    std::vector<milp::Entry> e{{theta_col_[s], 1.0}};
    for (int j = 0; j < n; ++j) {
      if (sp.g[j] != 0.0) e.push_back({j, -sp.g[j]});
    }
    master_.lp.add_row(e, milp::RowSense::kLessEqual, sp.u0);
  }
  master_.validate();
}

std::vector<gbd::SubproblemQuery> ConvexFamilyProblem::queries(const std::vector<double>& x) const {
  std::vector<gbd::SubproblemQuery> q;
  for (int s = 0; s < num_subproblems(); ++s) q.push_back({s, {x[theta_col_[s]]}});
  return q;
}

double ConvexFamilyProblem::first_stage_cost(const std::vector<double>& x) const {
  double v = 0.0;
  for (int j = 0; j < inst_.num_binaries(); ++j) v += inst_.y_cost[j] * x[j];
  for (int s = 0; s < num_subproblems(); ++s) v += inst_.subproblems[s].d * x[theta_col_[s]];
  return v;
}

gbd::SubproblemAnswer ConvexFamilyProblem::evaluate(const gbd::SubproblemQuery& q) {
  const auto& sp = inst_.subproblems.at(q.subproblem_id);
  const double t = q.point.at(0);
  gbd::SubproblemAnswer a;
  a.value = sp.value(t);
  a.slope = {sp.slope(t)};
  return a;
}

std::vector<double> ConvexFamilyProblem::features() const {
  double mean_b = 0.0;
  for (const auto& sp : inst_.subproblems) mean_b += sp.b / inst_.theta_max;
  mean_b /= num_subproblems();
  return {mean_b, num_subproblems() / 3.0, inst_.num_binaries() / 12.0};
}

ConvexFamilyProblem build_convex_family(int dim, std::uint64_t seed) {
  return ConvexFamilyProblem(sample_convex_instance(dim, seed));
}

}  // namespace igbd::cstr
