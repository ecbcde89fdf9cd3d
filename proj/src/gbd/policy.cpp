#include "igbd/gbd/policy.hpp"

#include <algorithm>
#include <cmath>

#include "igbd/gbd/igbd.hpp"

namespace igbd::gbd {

double action_value(int index) { return -1.0 + 2.0 * index / (kNumActions - 1); }

double map_action(double a, double eps_prev, double lo, double hi) {
  if (!std::isfinite(eps_prev)) eps_prev = 1.0;
  if (eps_prev < lo) return lo;
  return std::min(lo + 0.5 * (a + 1.0) * (eps_prev - lo), hi);
}

double ClassicPolicy::choose(const IgbdSession&, Rng&) { return lower_; }

double ExpDecayPolicy::choose(const IgbdSession& session, Rng&) {
  const int l = session.iteration() + 1;
  return std::max(hi_ * std::pow(alpha_, l - 1), lo_);
}

double UniformRandomPolicy::choose(const IgbdSession& session, Rng& rng) {
  const int k = static_cast<int>(rng.index(kNumActions));
  return map_action(action_value(k), session.gap());
}

double FixedActionPolicy::choose(const IgbdSession& session, Rng&) {
  return map_action(a_, session.gap());
}

}  // namespace igbd::gbd
