#include "igbd/gbd/problem.hpp"

#include <stdexcept>

namespace igbd::gbd {

void add_cut(milp::MilpModel& master, const DecomposedProblem& problem, const BendersCut& cut) {
  if (cut.slope.size() != cut.point.size()) {
    throw std::invalid_argument("cut slope and point differ in dimension");
  }
  if (cut.subproblem_id < 0 || cut.subproblem_id >= problem.num_subproblems()) {
    throw std::invalid_argument("cut references an unknown subproblem");
  }
  const auto cols = problem.complicating_columns(cut.subproblem_id);
  if (cols.size() != cut.point.size()) {
    throw std::invalid_argument("cut dimension does not match the complicating block");
  }
  // eta - slope'y >= S - slope'point
  std::vector<milp::Entry> row;
  row.push_back({problem.eta_column(cut.subproblem_id), 1.0});
  double rhs = cut.value_at_point;
  for (std::size_t k = 0; k < cols.size(); ++k) {
    if (cut.slope[k] != 0.0) row.push_back({cols[k], -cut.slope[k]});
    rhs -= cut.slope[k] * cut.point[k];
  }
  master.lp.add_row(std::move(row), milp::RowSense::kGreaterEqual, rhs);
}

double evaluate_cut(const BendersCut& cut, const std::vector<double>& y) {
  if (y.size() != cut.point.size()) throw std::invalid_argument("cut evaluated at wrong dimension");
  double v = cut.value_at_point;
  for (std::size_t k = 0; k < y.size(); ++k) v += cut.slope[k] * (y[k] - cut.point[k]);
  return v;
}

}  // namespace igbd::gbd
