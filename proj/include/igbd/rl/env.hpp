#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "igbd/gbd/igbd.hpp"
#include "igbd/gbd/policy.hpp"

namespace igbd::rl {

// Master time charged in the reward: CPU seconds or simplex pivots.
enum class TimeSource { kCpu, kProxy };

std::string to_string(TimeSource s);
TimeSource time_source_from_string(const std::string& s);

// -t_mp/t_ref + alpha * ln(eps_prev / max(eps_curr, eps_lo)) - 1.
double reward(double t_mp, double t_ref, double eps_prev, double eps_curr, double alpha, double eps_lo = gbd::kTolLower);

// Gap-like values enter the state clamped to [1e-10, 10]; +inf maps to 10.
double state_gap(double eps);

// Number of state entries that follow the instance features.
inline constexpr int kStateTail = 6;

// {p, l/T_max, tol, realized, eps, ln eps, ln(eps_prev/eps)}. Before the
// first iteration: {p, 0, tol_hi, tol_hi, 1, 0, 0}.
std::vector<double> make_state(const std::vector<double>& features, const gbd::IgbdSession& session,
                               double tol_hi = gbd::kTolUpper);

struct EnvConfig {
  TimeSource time_source = TimeSource::kProxy;
  // Seconds for kCpu, pivots for kProxy.
  double t_ref = 1.0;
  double alpha = 2.0;
  double tol_lo = gbd::kTolLower;
  double tol_hi = gbd::kTolUpper;
  gbd::IgbdOptions igbd{};
};

struct StepResult {
  std::vector<double> state;
  double reward = 0.0;
  bool done = false;
  // Ended without convergence (T_max, infeasible master, solver error).
  bool truncated = false;
  double tol = 0.0;
  double time_charged = 0.0;
  gbd::IterationRecord record;
  std::string diagnostic;
};

// One iGBD run viewed as an MDP whose action picks the next master
// tolerance through the action map.
class IgbdEnv {
 public:
  explicit IgbdEnv(EnvConfig config);

  const std::vector<double>& reset(std::unique_ptr<gbd::DecomposedProblem> problem);
  StepResult step(int action);

  bool active() const { return session_ != nullptr && !done_; }
  const std::vector<double>& state() const { return state_; }
  const gbd::IgbdSession& session() const { return *session_; }
  const EnvConfig& config() const { return config_; }
  int state_dim() const { return static_cast<int>(state_.size()); }

 private:
  EnvConfig config_;
  std::unique_ptr<gbd::DecomposedProblem> problem_;
  std::unique_ptr<gbd::IgbdSession> session_;
  std::vector<double> features_;
  std::vector<double> state_;
  bool done_ = true;
};

using ProblemSampler = std::function<std::unique_ptr<gbd::DecomposedProblem>(std::uint64_t seed)>;

// Median first-iteration master pivot count of the Classic policy over n
// sampled instances (seeds derive_seed(seed, 0..n-1)).
double calibrate_t_ref_proxy(const ProblemSampler& sampler, int n, std::uint64_t seed,
                             const gbd::IgbdOptions& options = {});

}  // namespace igbd::rl
