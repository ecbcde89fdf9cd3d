#pragma once

#include <memory>
#include <string>
#include <vector>

#include "igbd/util/random.hpp"

namespace igbd::gbd {

class IgbdSession;

inline constexpr double kTolLower = 1e-3;
inline constexpr double kTolUpper = 0.3;
inline constexpr int kNumActions = 11;

// The K grid points -1, -0.8, ..., 1.
double action_value(int index);

// min(lo + (a+1)/2 * (eps_prev - lo), hi); lo when eps_prev < lo. A
// non-finite eps_prev is treated as 1.
double map_action(double a, double eps_prev, double lo = kTolLower, double hi = kTolUpper);

// Chooses the master gap tolerance for the next iteration.
class TolerancePolicy {
 public:
  virtual ~TolerancePolicy() = default;
  virtual std::string name() const = 0;
  virtual double choose(const IgbdSession& session, Rng& rng) = 0;
};

// Always the lower tolerance (exact master when lower = 0).
class ClassicPolicy : public TolerancePolicy {
 public:
  explicit ClassicPolicy(double lower = kTolLower) : lower_(lower) {}
  std::string name() const override { return "classic"; }
  double choose(const IgbdSession& session, Rng& rng) override;

 private:
  double lower_;
};

// max(hi * alpha^(l-1), lo) for the iteration l about to run.
class ExpDecayPolicy : public TolerancePolicy {
 public:
  explicit ExpDecayPolicy(double alpha = 0.8, double lo = kTolLower, double hi = kTolUpper)
      : alpha_(alpha), lo_(lo), hi_(hi) {}
  std::string name() const override { return "exp"; }
  double choose(const IgbdSession& session, Rng& rng) override;

 private:
  double alpha_, lo_, hi_;
};

// Uniformly random grid action through the action map.
class UniformRandomPolicy : public TolerancePolicy {
 public:
  std::string name() const override { return "rand"; }
  double choose(const IgbdSession& session, Rng& rng) override;
};

// One fixed grid action through the action map.
class FixedActionPolicy : public TolerancePolicy {
 public:
  explicit FixedActionPolicy(double a) : a_(a) {}
  std::string name() const override { return "fixed"; }
  double choose(const IgbdSession& session, Rng& rng) override;

 private:
  double a_;
};

}  // namespace igbd::gbd
