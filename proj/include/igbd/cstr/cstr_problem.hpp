#pragma once

#include <map>
#include <utility>

#include "igbd/cstr/instance.hpp"
#include "igbd/cstr/schedule_master.hpp"
#include "igbd/gbd/problem.hpp"
#include "igbd/nlp/transition.hpp"

namespace igbd::cstr {

// Scheduling master plus one transition subproblem per (k, i, j) and per
// intermediate transition. Only transitions active at the master point are
// queried.
class CstrProblem : public gbd::DecomposedProblem {
 public:
  explicit CstrProblem(InstanceParams params, nlp::NlpOptions nlp_options = {});

  std::string instance_id() const override { return params_.id(); }
  const milp::MilpModel& base_master() const override { return master_.model; }
  int num_subproblems() const override { return master_.spec.num_subproblems(); }
  int eta_column(int sub) const override { return master_.spec.eta_column(sub); }
  std::vector<int> complicating_columns(int sub) const override { return {master_.spec.theta_column(sub)}; }
  std::vector<gbd::SubproblemQuery> queries(const std::vector<double>& x) const override;
  // -Phi_1 at x.
  double first_stage_cost(const std::vector<double>& x) const override;
  gbd::SubproblemAnswer evaluate(const gbd::SubproblemQuery& q) override;
  // The same arc in every slot.
  std::vector<int> cut_targets(int sub) const override;
  std::vector<double> features() const override { return params_.features(); }

  const InstanceParams& params() const { return params_; }
  const ScheduleMasterSpec& spec() const { return master_.spec; }
  // (from, to) of a subproblem, from = -1 for the intermediate transition.
  std::pair<int, int> arc(int sub) const;
  nlp::TransitionSpec subproblem_spec(int sub) const;
  // Cached subproblem value at theta.
  nlp::TransitionResult transition(int sub, double theta);
  long nlp_solves() const { return nlp_solves_; }

 private:
  InstanceParams params_;
  nlp::NlpOptions nlp_options_;
  ScheduleMaster master_;
  // Keyed by arc and theta: the value does not depend on the slot.
  std::map<std::pair<std::pair<int, int>, double>, std::pair<nlp::TransitionResult, double>> cache_;
  long nlp_solves_ = 0;
};

}  // namespace igbd::cstr
