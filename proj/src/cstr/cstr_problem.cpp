#include "igbd/cstr/cstr_problem.hpp"

#include <stdexcept>

#include "igbd/util/cpu_timer.hpp"

namespace igbd::cstr {

CstrProblem::CstrProblem(InstanceParams params, nlp::NlpOptions nlp_options)
    : params_(std::move(params)), nlp_options_(nlp_options), master_(build_master(params_)) {}

std::vector<gbd::SubproblemQuery> CstrProblem::queries(const std::vector<double>& x) const {
  const auto& s = master_.spec;
  std::vector<gbd::SubproblemQuery> out;
  for (int sub = 0; sub < s.num_subproblems(); ++sub) {
    if (x[s.z_column(sub)] > 0.5) out.push_back({sub, {x[s.theta_column(sub)]}});
  }
  return out;
}

double CstrProblem::first_stage_cost(const std::vector<double>& x) const {
  const auto& m = master_.model;
  const auto& s = master_.spec;
  double v = 0.0;
  for (const auto* block : {&s.z, &s.production, &s.sales, &s.inventory}) {
    for (int c : *block) v += m.lp.objective[c] * x[c];
  }
  return v;
}

std::pair<int, int> CstrProblem::arc(int sub) const {
  const auto& s = master_.spec;
  if (sub < 0 || sub >= s.num_subproblems()) throw std::out_of_range("subproblem id");
  if (sub >= s.n_trans()) return {-1, sub - s.n_trans()};
  return {(sub / s.n_p) % s.n_p, sub % s.n_p};
}

std::vector<int> CstrProblem::cut_targets(int sub) const {
  const auto& s = master_.spec;
  const auto [i, j] = arc(sub);
  if (i < 0) return {sub};
  std::vector<int> out;
  for (int k = 0; k + 1 < s.n_s; ++k) out.push_back(s.kij(k, i, j));
  return out;
}

nlp::TransitionSpec CstrProblem::subproblem_spec(int sub) const {
  const auto [i, j] = arc(sub);
  if (i < 0) return intermediate_spec(params_.table, params_.c0, j, params_.alpha_u);
  return transition_spec(params_.table, i, j, params_.alpha_u);
}

nlp::TransitionResult CstrProblem::transition(int sub, double theta) {
  const auto key = std::make_pair(arc(sub), theta);
  if (auto it = cache_.find(key); it != cache_.end()) return it->second.first;
  CpuTimer timer;
  auto res = nlp::solve_transition(subproblem_spec(sub), theta, nlp_options_);
  ++nlp_solves_;
  return cache_.emplace(key, std::make_pair(std::move(res), timer.seconds())).first->second.first;
}

gbd::SubproblemAnswer CstrProblem::evaluate(const gbd::SubproblemQuery& q) {
  const double theta = q.point.at(0);
  transition(q.subproblem_id, theta);
  const auto& [res, cpu] = cache_.at({arc(q.subproblem_id), theta});
  gbd::SubproblemAnswer a;
  a.value = res.value;
  a.slope = {res.slope};
  a.cpu_time = cpu;
  a.feasible = res.status == nlp::TransitionStatus::kConverged;
  if (!a.feasible) a.diagnostic = "transition NLP " + nlp::to_string(res.status) + " at theta " + std::to_string(theta);
  return a;
}

}  // namespace igbd::cstr
