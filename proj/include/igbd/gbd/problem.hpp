#pragma once

#include <string>
#include <vector>

#include "igbd/milp/linear_program.hpp"

namespace igbd::gbd {

// Supporting affine under-estimator of one subproblem value function:
// eta_sub >= value_at_point + slope'(y - point), slope = dS/dy.
struct BendersCut {
  int subproblem_id = 0;
  double value_at_point = 0.0;
  std::vector<double> slope;
  std::vector<double> point;
  int iteration = 0;
};

// A subproblem to evaluate at the current master solution.
struct SubproblemQuery {
  int subproblem_id = 0;
  std::vector<double> point;
};

struct SubproblemAnswer {
  double value = 0.0;
  std::vector<double> slope;
  double cpu_time = 0.0;
  bool feasible = true;
  std::string diagnostic;
};

// Master/subproblem split consumed by the iGBD loop. The master is a MILP in
// minimization form carrying one eta column per subproblem.
class DecomposedProblem {
 public:
  virtual ~DecomposedProblem() = default;

  virtual std::string instance_id() const = 0;
  virtual const milp::MilpModel& base_master() const = 0;
  virtual int num_subproblems() const = 0;
  virtual int eta_column(int subproblem_id) const = 0;
  // Master columns of the complicating variables seen by one subproblem.
  virtual std::vector<int> complicating_columns(int subproblem_id) const = 0;

  // Subproblems that contribute to the objective at master point x.
  virtual std::vector<SubproblemQuery> queries(const std::vector<double>& x) const = 0;
  // Objective part not represented by eta, evaluated at x.
  virtual double first_stage_cost(const std::vector<double>& x) const = 0;
  virtual SubproblemAnswer evaluate(const SubproblemQuery& query) = 0;
  // Subproblems sharing the value function of subproblem_id; each receives
  // a copy of every cut generated for it.
  virtual std::vector<int> cut_targets(int subproblem_id) const { return {subproblem_id}; }

  // Instance parameters scaled to [0, 1], used as policy features.
  virtual std::vector<double> features() const = 0;
};

// Appends eta >= S + slope'(y - point) to the master. Throws
// std::invalid_argument when the cut does not match the master's columns.
void add_cut(milp::MilpModel& master, const DecomposedProblem& problem, const BendersCut& cut);

// Cut value at y.
double evaluate_cut(const BendersCut& cut, const std::vector<double>& y);

}  // namespace igbd::gbd
