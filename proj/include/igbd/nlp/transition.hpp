#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace igbd::nlp {

struct ReactorParams {
  double c_f = 1.0;      // mol/L
  double volume = 5000;  // L
  double k_rate = 2.0;   // L^2/(mol^2 h)

  void validate() const;
};

// Flow that holds concentration c at steady state.
double steady_flow(const ReactorParams& r, double c);

// dc/dt of the CSTR.
double reactor_rate(const ReactorParams& r, double c, double flow);

struct TransitionBounds {
  double c_lo = 0.0;
  double c_hi = 1.5;
  double f_lo = 0.0;
  double f_hi = 3000.0;
};

struct TransitionSpec {
  ReactorParams reactor;
  double c_start = 0.0;
  double c_end = 0.0;
  // Absent for the transition out of the intermediate state.
  std::optional<double> f_start;
  double f_end = 0.0;
  double f_target = 0.0;
  TransitionBounds bounds;
  double alpha_u = 0.5;
  int n_fe = 30;

  // Throws std::invalid_argument when the invariants fail.
  void validate() const;
};

nlohmann::json to_json(const TransitionSpec& spec);
TransitionSpec transition_spec_from_json(const nlohmann::json& j);

// Backward-Euler transcription for a fixed transition time. Concentrations
// live on nodes 0..n_fe, flows are constant on elements 1..n_fe (stored as
// flow[m-1]).
class DiscretizedTransition {
 public:
  DiscretizedTransition(const TransitionSpec& spec, double theta);

  int n_fe() const { return spec_.n_fe; }
  double theta() const { return theta_; }
  double dtau() const { return 1.0 / spec_.n_fe; }
  const TransitionSpec& spec() const { return spec_; }

  // r_m = c_m - c_{m-1} - dtau*theta*(F_m/V*(c_f - c_m) - k*c_m^3), m = 1..n_fe.
  std::vector<double> residuals(const std::vector<double>& conc,
                                const std::vector<double>& flow) const;
  // alpha_u * theta * dtau * sum_m (F_m - F_target)^2.
  double objective(const std::vector<double>& flow) const;

  // Linear interpolation of c between the boundary values, F at F_target,
  // with the pinned boundary values applied.
  void initial_guess(std::vector<double>& conc, std::vector<double>& flow) const;

 private:
  TransitionSpec spec_;
  double theta_;
};

DiscretizedTransition discretize(const TransitionSpec& spec, double theta);

enum class TransitionStatus { kConverged, kMaxIter, kInfeasible };

std::string to_string(TransitionStatus s);

struct TransitionResult {
  TransitionStatus status = TransitionStatus::kInfeasible;
  double value = 0.0;
  // dS/dtheta.
  double slope = 0.0;
  bool slope_from_finite_difference = false;
  std::vector<double> control_traj;  // per element
  std::vector<double> state_traj;    // per node
  double kkt_residual = 0.0;
  int newton_iterations = 0;
};

struct NlpOptions {
  double feasibility_tol = 1e-10;
  double stationarity_tol = 1e-9;
  int max_outer = 60;
  int max_inner = 200;
  double penalty_init = 10.0;
  double penalty_max = 1e10;
  // Above this condition number the multiplier is not trusted and the slope
  // comes from a central difference instead.
  double max_multiplier_condition = 1e10;
};

TransitionResult solve_transition(const TransitionSpec& spec, double theta,
                                  const NlpOptions& options = {});

struct MinTimeOptions {
  double theta_lo = 0.05;
  double theta_hi = 24.0;
  double rel_width = 1e-2;
  NlpOptions nlp{};
};

// Smallest theta (to the bracket's relative width) at which the transition
// NLP converges; returns the feasible end of the final bracket. Throws
// std::runtime_error when theta_hi itself is infeasible.
double min_transition_time(const TransitionSpec& spec, const MinTimeOptions& options = {});

// tau, c, F per node; node 0 repeats the first element's flow.
std::string trajectory_csv(const TransitionResult& result);

}  // namespace igbd::nlp
