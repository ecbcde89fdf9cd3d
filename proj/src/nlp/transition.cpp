#include "igbd/nlp/transition.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include <Eigen/Dense>

#include "igbd/util/format.hpp"

namespace igbd::nlp {

void ReactorParams::validate() const {
  if (!(c_f > 0.0 && volume > 0.0 && k_rate > 0.0)) {
    throw std::invalid_argument("reactor parameters must be strictly positive");
  }
}

double steady_flow(const ReactorParams& r, double c) {
  return r.volume * r.k_rate * c * c * c / (r.c_f - c);
}

double reactor_rate(const ReactorParams& r, double c, double flow) {
  return flow / r.volume * (r.c_f - c) - r.k_rate * c * c * c;
}

void TransitionSpec::validate() const {
  reactor.validate();
  const auto& b = bounds;
  auto in = [](double v, double lo, double hi) { return v >= lo && v <= hi; };
  if (!(b.c_lo <= b.c_hi && b.f_lo <= b.f_hi)) throw std::invalid_argument("inverted transition bounds");
  if (!in(c_start, b.c_lo, b.c_hi) || !in(c_end, b.c_lo, b.c_hi)) {
    throw std::invalid_argument("boundary concentration outside [c_lo, c_hi]");
  }
  if ((f_start && !in(*f_start, b.f_lo, b.f_hi)) || !in(f_end, b.f_lo, b.f_hi) ||
      !in(f_target, b.f_lo, b.f_hi)) {
    throw std::invalid_argument("boundary flow outside [f_lo, f_hi]");
  }
  if (n_fe < 2) throw std::invalid_argument("n_fe must be at least 2");
  if (!(alpha_u > 0.0)) throw std::invalid_argument("alpha_u must be positive");
}

nlohmann::json to_json(const TransitionSpec& s) {
  nlohmann::json j;
  j["schema"] = "igbd.transition.v1";
  j["reactor"] = {{"c_f", s.reactor.c_f}, {"V", s.reactor.volume}, {"k", s.reactor.k_rate}};
  j["c_start"] = s.c_start;
  j["c_end"] = s.c_end;
  j["F_start"] = s.f_start ? nlohmann::json(*s.f_start) : nlohmann::json(nullptr);
  j["F_end"] = s.f_end;
  j["F_target"] = s.f_target;
  j["bounds"] = {{"c_lo", s.bounds.c_lo}, {"c_hi", s.bounds.c_hi},
                 {"F_lo", s.bounds.f_lo}, {"F_hi", s.bounds.f_hi}};
  j["alpha_u"] = s.alpha_u;
  j["n_fe"] = s.n_fe;
  return j;
}

TransitionSpec transition_spec_from_json(const nlohmann::json& j) {
  if (j.value("schema", "") != "igbd.transition.v1") {
    throw std::invalid_argument("not an igbd.transition.v1 document");
  }
  TransitionSpec s;
  s.reactor.c_f = j.at("reactor").at("c_f").get<double>();
  s.reactor.volume = j.at("reactor").at("V").get<double>();
  s.reactor.k_rate = j.at("reactor").at("k").get<double>();
  s.c_start = j.at("c_start").get<double>();
  s.c_end = j.at("c_end").get<double>();
  if (!j.at("F_start").is_null()) s.f_start = j.at("F_start").get<double>();
  s.f_end = j.at("F_end").get<double>();
  s.f_target = j.at("F_target").get<double>();
  const auto& b = j.at("bounds");
  s.bounds = {b.at("c_lo").get<double>(), b.at("c_hi").get<double>(), b.at("F_lo").get<double>(),
              b.at("F_hi").get<double>()};
  s.alpha_u = j.at("alpha_u").get<double>();
  s.n_fe = j.at("n_fe").get<int>();
  s.validate();
  return s;
}

DiscretizedTransition::DiscretizedTransition(const TransitionSpec& spec, double theta)
    : spec_(spec), theta_(theta) {
  spec_.validate();
  if (!(theta > 0.0)) throw std::invalid_argument("transition time must be positive");
}

std::vector<double> DiscretizedTransition::residuals(const std::vector<double>& conc,
                                                     const std::vector<double>& flow) const {
  const int n = spec_.n_fe;
  if (static_cast<int>(conc.size()) != n + 1 || static_cast<int>(flow.size()) != n) {
    throw std::invalid_argument("trajectory size does not match n_fe");
  }
  std::vector<double> r(n);
  const double step = dtau() * theta_;
  for (int m = 1; m <= n; ++m) {
    r[m - 1] = conc[m] - conc[m - 1] - step * reactor_rate(spec_.reactor, conc[m], flow[m - 1]);
  }
  return r;
}

double DiscretizedTransition::objective(const std::vector<double>& flow) const {
  double acc = 0.0;
  for (double f : flow) acc += (f - spec_.f_target) * (f - spec_.f_target);
  return spec_.alpha_u * theta_ * dtau() * acc;
}

void DiscretizedTransition::initial_guess(std::vector<double>& conc,
                                          std::vector<double>& flow) const {
  const int n = spec_.n_fe;
  conc.resize(n + 1);
  flow.assign(n, spec_.f_target);
  for (int m = 0; m <= n; ++m) {
    const double t = static_cast<double>(m) / n;
    conc[m] = (1.0 - t) * spec_.c_start + t * spec_.c_end;
  }
  flow[n - 1] = spec_.f_end;
}

DiscretizedTransition discretize(const TransitionSpec& spec, double theta) {
  return DiscretizedTransition(spec, theta);
}

std::string to_string(TransitionStatus s) {
  switch (s) {
    case TransitionStatus::kConverged: return "Converged";
    case TransitionStatus::kMaxIter: return "MaxIter";
    case TransitionStatus::kInfeasible: return "Infeasible";
  }
  return "?";
}

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Scaled problem: x = [c_1..c_{N-1}, u_1..u_{N-1}] with u = F / flow_scale,
// objective divided by alpha_u * flow_scale^2. Node N and the last element's
// flow are pinned.
class ScaledTransition {
 public:
  ScaledTransition(const TransitionSpec& s, double theta)
      : s_(s), theta_(theta), n_fe_(s.n_fe), nv_(s.n_fe - 1) {
    flow_scale_ = std::max(s.bounds.f_hi, 1.0);
    a_ = flow_scale_ / s.reactor.volume;
    step_ = theta / n_fe_;
    u_target_ = s.f_target / flow_scale_;
    u_end_ = s.f_end / flow_scale_;
    lo_.resize(2 * nv_);
    hi_.resize(2 * nv_);
    for (int i = 0; i < nv_; ++i) {
      lo_[i] = s.bounds.c_lo;
      hi_[i] = s.bounds.c_hi;
      lo_[nv_ + i] = s.bounds.f_lo / flow_scale_;
      hi_[nv_ + i] = s.bounds.f_hi / flow_scale_;
    }
  }

  int num_vars() const { return 2 * nv_; }
  int num_rows() const { return n_fe_; }
  const VectorXd& lo() const { return lo_; }
  const VectorXd& hi() const { return hi_; }
  double objective_scale() const { return s_.alpha_u * flow_scale_ * flow_scale_; }
  double flow_scale() const { return flow_scale_; }

  double conc(const VectorXd& x, int m) const {
    if (m == 0) return s_.c_start;
    if (m == n_fe_) return s_.c_end;
    return x[m - 1];
  }
  double flow(const VectorXd& x, int m) const { return m == n_fe_ ? u_end_ : x[nv_ + m - 1]; }

  // Scaled rate g(c, u) = a*u*(c_f - c) - k*c^3.
  double rate(double c, double u) const {
    return a_ * u * (s_.reactor.c_f - c) - s_.reactor.k_rate * c * c * c;
  }

  double objective(const VectorXd& x) const {
    double acc = 0.0;
    for (int m = 1; m <= n_fe_; ++m) {
      const double d = flow(x, m) - u_target_;
      acc += d * d;
    }
    return step_ * acc;
  }

  VectorXd objective_gradient(const VectorXd& x) const {
    VectorXd g = VectorXd::Zero(2 * nv_);
    for (int m = 1; m < n_fe_; ++m) g[nv_ + m - 1] = 2.0 * step_ * (flow(x, m) - u_target_);
    return g;
  }

  VectorXd residuals(const VectorXd& x) const {
    VectorXd r(n_fe_);
    for (int m = 1; m <= n_fe_; ++m) {
      const double c = conc(x, m);
      r[m - 1] = c - conc(x, m - 1) - step_ * rate(c, flow(x, m));
    }
    return r;
  }

  // d r / d theta (per row).
  VectorXd residual_theta_derivative(const VectorXd& x) const {
    VectorXd d(n_fe_);
    for (int m = 1; m <= n_fe_; ++m) d[m - 1] = -rate(conc(x, m), flow(x, m)) / n_fe_;
    return d;
  }

  // Sparse Jacobian: each row touches c_m, c_{m-1}, u_m.
  struct RowJac {
    int idx[3];
    double val[3];
    int count = 0;
  };

  std::vector<RowJac> jacobian(const VectorXd& x) const {
    std::vector<RowJac> jac(n_fe_);
    for (int m = 1; m <= n_fe_; ++m) {
      auto& row = jac[m - 1];
      const double c = conc(x, m);
      const double u = flow(x, m);
      if (m < n_fe_) {
        row.idx[row.count] = m - 1;
        row.val[row.count++] = 1.0 + step_ * (a_ * u + 3.0 * s_.reactor.k_rate * c * c);
        row.idx[row.count] = nv_ + m - 1;
        row.val[row.count++] = -step_ * a_ * (s_.reactor.c_f - c);
      }
      if (m - 1 >= 1) {
        row.idx[row.count] = m - 2;
        row.val[row.count++] = -1.0;
      }
    }
    return jac;
  }

  VectorXd jacobian_transpose_times(const std::vector<RowJac>& jac, const VectorXd& y) const {
    VectorXd out = VectorXd::Zero(2 * nv_);
    for (int m = 0; m < n_fe_; ++m) {
      for (int t = 0; t < jac[m].count; ++t) out[jac[m].idx[t]] += jac[m].val[t] * y[m];
    }
    return out;
  }

  // Augmented Lagrangian f + mu'r + rho/2 |r|^2 with gradient and Hessian.
  double al_value(const VectorXd& x, const VectorXd& mu, double rho) const {
    const VectorXd r = residuals(x);
    return objective(x) + mu.dot(r) + 0.5 * rho * r.squaredNorm();
  }

  VectorXd al_gradient(const VectorXd& x, const VectorXd& mu, double rho) const {
    const VectorXd r = residuals(x);
    return objective_gradient(x) + jacobian_transpose_times(jacobian(x), mu + rho * r);
  }

  MatrixXd al_hessian(const VectorXd& x, const VectorXd& mu, double rho) const {
    const int n = 2 * nv_;
    MatrixXd h = MatrixXd::Zero(n, n);
    for (int m = 1; m < n_fe_; ++m) h(nv_ + m - 1, nv_ + m - 1) = 2.0 * step_;
    const VectorXd r = residuals(x);
    const auto jac = jacobian(x);
    for (int m = 0; m < n_fe_; ++m) {
      const auto& row = jac[m];
      for (int p = 0; p < row.count; ++p) {
        for (int q = 0; q < row.count; ++q) h(row.idx[p], row.idx[q]) += rho * row.val[p] * row.val[q];
      }
      const int node = m + 1;
      if (node < n_fe_) {
        const double w = mu[m] + rho * r[m];
        const int ic = node - 1;
        const int iu = nv_ + node - 1;
        h(ic, ic) += w * 6.0 * step_ * s_.reactor.k_rate * conc(x, node);
        h(ic, iu) += w * step_ * a_;
        h(iu, ic) += w * step_ * a_;
      }
    }
    return h;
  }

  VectorXd project(VectorXd x) const {
    for (int i = 0; i < x.size(); ++i) x[i] = std::clamp(x[i], lo_[i], hi_[i]);
    return x;
  }

  double projected_gradient_norm(const VectorXd& x, const VectorXd& g) const {
    return (x - project(x - g)).lpNorm<Eigen::Infinity>();
  }

 private:
  const TransitionSpec& s_;
  double theta_;
  int n_fe_;
  int nv_;
  double flow_scale_ = 1.0;
  double a_ = 0.0;
  double step_ = 0.0;
  double u_target_ = 0.0;
  double u_end_ = 0.0;
  VectorXd lo_, hi_;
};

// Bertsekas projected Newton on the bound-constrained augmented Lagrangian.
int projected_newton(const ScaledTransition& p, VectorXd& x, const VectorXd& mu, double rho,
                     double tol, int max_iter) {
  const int n = p.num_vars();
  int iter = 0;
  for (; iter < max_iter; ++iter) {
    const VectorXd g = p.al_gradient(x, mu, rho);
    const double pg = p.projected_gradient_norm(x, g);
    if (pg <= tol) break;
    const double eps = std::min(1e-3, pg);
    std::vector<int> free_idx;
    std::vector<bool> active(n, false);
    for (int i = 0; i < n; ++i) {
      const bool at_lo = x[i] <= p.lo()[i] + eps && g[i] > 0.0;
      const bool at_hi = x[i] >= p.hi()[i] - eps && g[i] < 0.0;
      active[i] = at_lo || at_hi;
      if (!active[i]) free_idx.push_back(i);
    }
    const MatrixXd h = p.al_hessian(x, mu, rho);
    VectorXd d = VectorXd::Zero(n);
    const int nf = static_cast<int>(free_idx.size());
    if (nf > 0) {
      MatrixXd hf(nf, nf);
      VectorXd gf(nf);
      double diag_max = 0.0;
      for (int a = 0; a < nf; ++a) {
        gf[a] = g[free_idx[a]];
        for (int b = 0; b < nf; ++b) hf(a, b) = h(free_idx[a], free_idx[b]);
        diag_max = std::max(diag_max, std::abs(hf(a, a)));
      }
      double shift = 0.0;
      Eigen::LLT<MatrixXd> llt;
      for (int attempt = 0; attempt < 60; ++attempt) {
        MatrixXd m = hf;
        m.diagonal().array() += shift;
        llt.compute(m);
        if (llt.info() == Eigen::Success) break;
        shift = shift == 0.0 ? 1e-10 * std::max(diag_max, 1.0) : shift * 10.0;
      }
      const VectorXd df = llt.solve(-gf);
      for (int a = 0; a < nf; ++a) d[free_idx[a]] = df[a];
    }
    for (int i = 0; i < n; ++i) {
      if (active[i]) d[i] = -g[i] / std::max(std::abs(h(i, i)), 1e-8);
    }

    const double f0 = p.al_value(x, mu, rho);
    double alpha = 1.0;
    bool accepted = false;
    for (int ls = 0; ls < 50; ++ls) {
      const VectorXd xn = p.project(x + alpha * d);
      const double decrease = g.dot(xn - x);
      const double fn = p.al_value(xn, mu, rho);
      if (fn <= f0 + 1e-4 * decrease || (ls == 0 && std::abs(fn - f0) <= 1e-15 * std::max(1.0, std::abs(f0)))) {
        x = xn;
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) break;
  }
  return iter;
}

struct CoreSolve {
  TransitionStatus status = TransitionStatus::kMaxIter;
  VectorXd x;
  VectorXd mu;
  double scaled_value = 0.0;
  double kkt = 0.0;
  int newton = 0;
};

CoreSolve solve_scaled(const ScaledTransition& p, const TransitionSpec& spec, double theta,
                       const NlpOptions& opt) {
  DiscretizedTransition d(spec, theta);
  std::vector<double> c0, f0;
  d.initial_guess(c0, f0);
  const int nv = spec.n_fe - 1;
  VectorXd x(2 * nv);
  for (int i = 0; i < nv; ++i) {
    x[i] = c0[i + 1];
    x[nv + i] = f0[i] / p.flow_scale();
  }
  x = p.project(x);

  CoreSolve out;
  VectorXd mu = VectorXd::Zero(p.num_rows());
  double rho = opt.penalty_init;
  double omega = 1.0 / rho;
  double eta = 1.0 / std::pow(rho, 0.1);
  for (int outer = 0; outer < opt.max_outer; ++outer) {
    out.newton += projected_newton(p, x, mu, rho, std::max(omega, 0.1 * opt.stationarity_tol),
                                   opt.max_inner);
    const VectorXd r = p.residuals(x);
    const double viol = r.lpNorm<Eigen::Infinity>();
    if (viol <= std::max(eta, 0.1 * opt.feasibility_tol)) {
      mu += rho * r;
      const VectorXd g = p.objective_gradient(x) + p.jacobian_transpose_times(p.jacobian(x), mu);
      const double stat = p.projected_gradient_norm(x, g);
      if (viol <= opt.feasibility_tol && stat <= opt.stationarity_tol) {
        out.status = TransitionStatus::kConverged;
        out.kkt = std::max(viol, stat);
        break;
      }
      eta = std::max(eta / std::pow(rho, 0.9), 0.1 * opt.feasibility_tol);
      omega = std::max(omega / rho, 0.1 * opt.stationarity_tol);
    } else {
      if (rho >= opt.penalty_max) {
        out.status = TransitionStatus::kInfeasible;
        break;
      }
      // A residual this far from zero under a large penalty means the
      // boundary states cannot be connected in time theta.
      if (rho >= 1e7 && viol > 1e-5) {
        out.status = TransitionStatus::kInfeasible;
        break;
      }
      rho = std::min(rho * 10.0, opt.penalty_max);
      eta = std::max(1.0 / std::pow(rho, 0.1), 0.1 * opt.feasibility_tol);
      omega = std::max(1.0 / rho, 0.1 * opt.stationarity_tol);
    }
  }
  out.x = x;
  out.mu = mu;
  out.scaled_value = p.objective(x);
  if (out.status != TransitionStatus::kConverged) {
    const VectorXd r = p.residuals(x);
    const VectorXd g = p.objective_gradient(x) + p.jacobian_transpose_times(p.jacobian(x), mu);
    out.kkt = std::max(r.lpNorm<Eigen::Infinity>(), p.projected_gradient_norm(x, g));
  }
  return out;
}

// Multipliers from stationarity on the free variables; nullopt when the
// system is underdetermined or too ill-conditioned to trust.
std::optional<VectorXd> polished_multipliers(const ScaledTransition& p, const VectorXd& x,
                                             double max_condition) {
  const int n = p.num_vars();
  const int m = p.num_rows();
  std::vector<int> free_idx;
  for (int i = 0; i < n; ++i) {
    const double margin = 1e-9 * std::max(1.0, p.hi()[i] - p.lo()[i]);
    if (x[i] > p.lo()[i] + margin && x[i] < p.hi()[i] - margin) free_idx.push_back(i);
  }
  const int nf = static_cast<int>(free_idx.size());
  if (nf < m) return std::nullopt;
  MatrixXd jt = MatrixXd::Zero(nf, m);
  std::vector<int> pos(n, -1);
  for (int a = 0; a < nf; ++a) pos[free_idx[a]] = a;
  const auto jac = p.jacobian(x);
  for (int r = 0; r < m; ++r) {
    for (int t = 0; t < jac[r].count; ++t) {
      if (pos[jac[r].idx[t]] >= 0) jt(pos[jac[r].idx[t]], r) = jac[r].val[t];
    }
  }
  const VectorXd g = p.objective_gradient(x);
  VectorXd rhs(nf);
  for (int a = 0; a < nf; ++a) rhs[a] = -g[free_idx[a]];
  Eigen::JacobiSVD<MatrixXd> svd(jt, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || sv[sv.size() - 1] <= 0.0) return std::nullopt;
  if (sv[0] / sv[sv.size() - 1] > max_condition) return std::nullopt;
  return VectorXd(svd.solve(rhs));
}

}  // namespace

TransitionResult solve_transition(const TransitionSpec& spec, double theta, const NlpOptions& options) {
  spec.validate();
  if (!(theta > 0.0)) throw std::invalid_argument("transition time must be positive");
  ScaledTransition p(spec, theta);
  const CoreSolve core = solve_scaled(p, spec, theta, options);

  TransitionResult res;
  res.status = core.status;
  res.newton_iterations = core.newton;
  res.kkt_residual = core.kkt;
  const double scale = p.objective_scale();
  res.value = core.scaled_value * scale;
  const int n = spec.n_fe;
  res.state_traj.resize(n + 1);
  res.control_traj.resize(n);
  for (int m = 0; m <= n; ++m) res.state_traj[m] = p.conc(core.x, m);
  for (int m = 1; m <= n; ++m) res.control_traj[m - 1] = p.flow(core.x, m) * p.flow_scale();
  if (core.status != TransitionStatus::kConverged) return res;

  const auto mu = polished_multipliers(p, core.x, options.max_multiplier_condition);
  if (mu) {
    const double ds = core.scaled_value / theta + mu->dot(p.residual_theta_derivative(core.x));
    res.slope = ds * scale;
    return res;
  }
  // Central difference, falling back to one side near the feasibility edge.
  const double h = 1e-4 * theta;
  ScaledTransition pp(spec, theta + h), pm(spec, theta - h);
  const CoreSolve up = solve_scaled(pp, spec, theta + h, options);
  const CoreSolve dn = solve_scaled(pm, spec, theta - h, options);
  const bool up_ok = up.status == TransitionStatus::kConverged;
  const bool dn_ok = dn.status == TransitionStatus::kConverged;
  res.slope_from_finite_difference = true;
  if (up_ok && dn_ok) {
    res.slope = (up.scaled_value - dn.scaled_value) * scale / (2.0 * h);
  } else if (up_ok) {
    res.slope = (up.scaled_value - core.scaled_value) * scale / h;
  } else if (dn_ok) {
    res.slope = (core.scaled_value - dn.scaled_value) * scale / h;
  } else {
    // Multiplier from the augmented Lagrangian as a last resort.
    const double ds = core.scaled_value / theta + core.mu.dot(p.residual_theta_derivative(core.x));
    res.slope = ds * scale;
    res.slope_from_finite_difference = false;
  }
  return res;
}

double min_transition_time(const TransitionSpec& spec, const MinTimeOptions& options) {
  auto feasible = [&](double theta) {
    return solve_transition(spec, theta, options.nlp).status == TransitionStatus::kConverged;
  };
  if (!feasible(options.theta_hi)) {
    throw std::runtime_error("transition infeasible even at theta_hi");
  }
  if (feasible(options.theta_lo)) return options.theta_lo;
  double lo = options.theta_lo, hi = options.theta_hi;
  while ((hi - lo) > options.rel_width * hi) {
    const double mid = 0.5 * (lo + hi);
    if (feasible(mid)) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

std::string trajectory_csv(const TransitionResult& result) {
  std::ostringstream out;
  out << "tau,c,F\n";
  const int n = static_cast<int>(result.control_traj.size());
  for (int m = 0; m <= n; ++m) {
    const double flow = m == 0 ? result.control_traj.front() : result.control_traj[m - 1];
    out << join_csv({format_double(static_cast<double>(m) / n), format_double(result.state_traj[m]),
                     format_double(flow)})
        << "\n";
  }
  return out.str();
}

}  // namespace igbd::nlp
