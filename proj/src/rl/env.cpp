#include "igbd/rl/env.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace igbd::rl {

std::string to_string(TimeSource s) { return s == TimeSource::kCpu ? "cpu" : "proxy"; }

TimeSource time_source_from_string(const std::string& s) {
  if (s == "cpu") return TimeSource::kCpu;
  if (s == "proxy") return TimeSource::kProxy;
  throw std::invalid_argument("unknown time source '" + s + "' (expected cpu or proxy)");
}

double reward(double t_mp, double t_ref, double eps_prev, double eps_curr, double alpha, double eps_lo) {
  if (!(t_ref > 0.0)) throw std::invalid_argument("t_ref must be positive");
  return -t_mp / t_ref + alpha * std::log(eps_prev / std::max(eps_curr, eps_lo)) - 1.0;
}

double state_gap(double eps) {
  if (std::isnan(eps)) return 10.0;
  return std::clamp(eps, 1e-10, 10.0);
}

std::vector<double> make_state(const std::vector<double>& features, const gbd::IgbdSession& session, double tol_hi) {
  std::vector<double> s = features;
  const auto& recs = session.trace().records;
  const double gap = state_gap(session.gap());
  const double prev = recs.size() >= 2 ? state_gap(recs[recs.size() - 2].gap) : 1.0;
  s.push_back(static_cast<double>(recs.size()) / session.options().t_max);
  s.push_back(recs.empty() ? tol_hi : recs.back().tol);
  s.push_back(recs.empty() ? tol_hi : state_gap(recs.back().realized));
  s.push_back(gap);
  s.push_back(std::log(gap));
  s.push_back(recs.empty() ? 0.0 : std::log(prev / gap));
  return s;
}

IgbdEnv::IgbdEnv(EnvConfig config) : config_(std::move(config)) {
  if (!(config_.t_ref > 0.0)) throw std::invalid_argument("t_ref must be positive");
  if (!(config_.tol_lo > 0.0 && config_.tol_lo <= config_.tol_hi)) throw std::invalid_argument("bad tolerance range");
}

const std::vector<double>& IgbdEnv::reset(std::unique_ptr<gbd::DecomposedProblem> problem) {
  if (!problem) throw std::invalid_argument("reset needs a problem");
  session_.reset();
  problem_ = std::move(problem);
  session_ = std::make_unique<gbd::IgbdSession>(*problem_, config_.igbd);
  features_ = problem_->features();
  state_ = make_state(features_, *session_, config_.tol_hi);
  done_ = false;
  return state_;
}

StepResult IgbdEnv::step(int action) {
  if (!active()) throw std::logic_error("step called without an active episode");
  if (action < 0 || action >= gbd::kNumActions) throw std::out_of_range("action index");
  StepResult out;
  const double eps_prev = session_->gap();
  out.tol = gbd::map_action(gbd::action_value(action), eps_prev, config_.tol_lo, config_.tol_hi);
  try {
    out.record = session_->step(out.tol);
  } catch (const std::exception& e) {
    done_ = true;
    out.done = true;
    out.truncated = true;
    out.diagnostic = e.what();
    out.state = state_;
    out.reward = -1.0;
    return out;
  }
  out.time_charged =
      config_.time_source == TimeSource::kCpu ? out.record.master_cpu : static_cast<double>(out.record.master_pivots);
  out.reward = reward(out.time_charged, config_.t_ref, state_gap(eps_prev), state_gap(session_->gap()), config_.alpha,
                      config_.tol_lo);
  state_ = make_state(features_, *session_, config_.tol_hi);
  out.state = state_;
  done_ = session_->done();
  out.done = done_;
  out.truncated = done_ && !session_->trace().converged;
  out.diagnostic = session_->trace().diagnostic;
  return out;
}

double calibrate_t_ref_proxy(const ProblemSampler& sampler, int n, std::uint64_t seed,
                             const gbd::IgbdOptions& options) {
  if (n < 1) throw std::invalid_argument("calibration needs at least one instance");
  std::vector<double> pivots;
  for (int i = 0; i < n; ++i) {
    auto problem = sampler(derive_seed(seed, static_cast<std::uint64_t>(i)));
    gbd::IgbdSession session(*problem, options);
    pivots.push_back(static_cast<double>(session.step(gbd::kTolLower).master_pivots));
  }
  std::sort(pivots.begin(), pivots.end());
  const std::size_t m = pivots.size() / 2;
  const double med = pivots.size() % 2 == 1 ? pivots[m] : 0.5 * (pivots[m - 1] + pivots[m]);
  return std::max(med, 1.0);
}

}  // namespace igbd::rl
