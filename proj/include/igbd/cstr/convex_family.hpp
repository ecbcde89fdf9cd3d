#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "igbd/gbd/problem.hpp"

namespace igbd::cstr {

// S_s(theta) = a (theta - b)^2 + c on theta in [0, 4].
struct ConvexSubproblem {
  double a = 1.0;
  double b = 2.0;
  double c = 1.0;
  // Linear first-stage cost on theta_s.
  double d = 0.0;
  // theta_s <= u0 + g'y.
  double u0 = 4.0;
  std::vector<double> g;

  double value(double theta) const { return a * (theta - b) * (theta - b) + c; }
  double slope(double theta) const { return 2.0 * a * (theta - b); }
};

struct KnapsackRow {
  std::vector<double> weight;
  double capacity = 0.0;
};

struct ConvexFamilyInstance {
  std::string id;
  std::vector<double> y_cost;  // positive
  std::vector<KnapsackRow> rows;
  std::vector<ConvexSubproblem> subproblems;
  double theta_max = 4.0;

  int num_binaries() const { return static_cast<int>(y_cost.size()); }
};

ConvexFamilyInstance sample_convex_instance(int dim, std::uint64_t seed);

struct ConvexOracleResult {
  double objective = 0.0;
  std::vector<int> y;
  std::vector<double> theta;
};

// Exhaustive enumeration over y with the closed-form theta minimizer.
ConvexOracleResult convex_oracle(const ConvexFamilyInstance& inst);

// Master columns: y_0..y_{n-1}, theta_s, eta_s.
class ConvexFamilyProblem : public gbd::DecomposedProblem {
 public:
  explicit ConvexFamilyProblem(ConvexFamilyInstance inst);

  std::string instance_id() const override { return inst_.id; }
  const milp::MilpModel& base_master() const override { return master_; }
  int num_subproblems() const override { return static_cast<int>(inst_.subproblems.size()); }
  int eta_column(int s) const override { return eta_col_[s]; }
  std::vector<int> complicating_columns(int s) const override { return {theta_col_[s]}; }
  std::vector<gbd::SubproblemQuery> queries(const std::vector<double>& x) const override;
  double first_stage_cost(const std::vector<double>& x) const override;
  gbd::SubproblemAnswer evaluate(const gbd::SubproblemQuery& q) override;
  std::vector<double> features() const override;

  const ConvexFamilyInstance& instance() const { return inst_; }

 private:
  ConvexFamilyInstance inst_;
  milp::MilpModel master_;
  std::vector<int> theta_col_, eta_col_;
};

// DecomposedProblem over a sampled family member.
ConvexFamilyProblem build_convex_family(int dim, std::uint64_t seed);

}  // namespace igbd::cstr
