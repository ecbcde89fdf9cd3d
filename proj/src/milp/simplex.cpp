#include "igbd/milp/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>
#include <Eigen/SparseLU>

namespace igbd::milp {

std::string to_string(LpStatus s) {
  switch (s) {
    case LpStatus::kOptimal: return "Optimal";
    case LpStatus::kInfeasible: return "Infeasible";
    case LpStatus::kUnbounded: return "Unbounded";
    case LpStatus::kIterationLimit: return "IterationLimit";
  }
  return "?";
}

namespace {

double pow2_round(double v) { return std::exp2(std::round(std::log2(v))); }

}  // namespace

SimplexSolver::SimplexSolver(const LinearProgram& lp, LpOptions options)
    : lp_(lp), options_(options), n_(lp.num_vars()), m_(lp.num_rows()) {
  lp_.validate();
  col_scale_.assign(n_, 1.0);
  row_scale_.assign(m_, 1.0);

  std::vector<Column> raw(n_);
  for (int i = 0; i < m_; ++i) {
    for (const auto& e : lp_.rows[i].entries) {
      if (e.value == 0.0) continue;
      raw[e.col].rows.push_back(i);
      raw[e.col].values.push_back(e.value);
    }
  }
  // Merge duplicate (row, col) entries.
  for (auto& c : raw) {
    std::vector<std::pair<int, double>> tmp;
    for (std::size_t k = 0; k < c.rows.size(); ++k) tmp.emplace_back(c.rows[k], c.values[k]);
    std::stable_sort(tmp.begin(), tmp.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    c.rows.clear();
    c.values.clear();
    for (const auto& [r, v] : tmp) {
      if (!c.rows.empty() && c.rows.back() == r) {
        c.values.back() += v;
      } else {
        c.rows.push_back(r);
        c.values.push_back(v);
      }
    }
  }

  if (options_.scale) {
    // Geometric-mean scaling with power-of-two factors.
    for (int pass = 0; pass < 4; ++pass) {
      std::vector<double> rmax(m_, 0.0), rmin(m_, kInf);
      for (int j = 0; j < n_; ++j) {
        for (std::size_t k = 0; k < raw[j].rows.size(); ++k) {
          const double a = std::abs(raw[j].values[k]) * col_scale_[j];
          if (a == 0.0) continue;
          const int r = raw[j].rows[k];
          rmax[r] = std::max(rmax[r], a);
          rmin[r] = std::min(rmin[r], a);
        }
      }
      for (int i = 0; i < m_; ++i) {
        if (rmax[i] > 0.0) row_scale_[i] = pow2_round(1.0 / std::sqrt(rmax[i] * rmin[i]));
      }
      for (int j = 0; j < n_; ++j) {
        double cmax = 0.0, cmin = kInf;
        for (std::size_t k = 0; k < raw[j].rows.size(); ++k) {
          const double a = std::abs(raw[j].values[k]) * row_scale_[raw[j].rows[k]];
          if (a == 0.0) continue;
          cmax = std::max(cmax, a);
          cmin = std::min(cmin, a);
        }
        if (cmax > 0.0) col_scale_[j] = pow2_round(1.0 / std::sqrt(cmax * cmin));
      }
    }
  }

  cols_.resize(n_);
  cost_.resize(n_);
  cost_norm_ = 1.0;
  for (int j = 0; j < n_; ++j) {
    cols_[j].rows = raw[j].rows;
    cols_[j].values.resize(raw[j].values.size());
    for (std::size_t k = 0; k < raw[j].rows.size(); ++k) {
      cols_[j].values[k] = raw[j].values[k] * row_scale_[raw[j].rows[k]] * col_scale_[j];
    }
    cost_[j] = lp_.objective[j] * col_scale_[j];
    cost_norm_ = std::max(cost_norm_, std::abs(cost_[j]));
  }
  rhs_.resize(m_);
  for (int i = 0; i < m_; ++i) rhs_[i] = lp_.rows[i].rhs * row_scale_[i];
}

// Working state of a single solve.
class SimplexRun {
 public:
  SimplexRun(const SimplexSolver& s, const std::vector<VarBounds>& bounds)
      : s_(s), opt_(s.options_), n_(s.n_), m_(s.m_), total_(s.n_ + s.m_) {
    lo_.resize(total_);
    hi_.resize(total_);
    for (int j = 0; j < n_; ++j) {
      lo_[j] = bounds[j].lo / s.col_scale_[j];
      hi_[j] = bounds[j].hi / s.col_scale_[j];
    }
    for (int i = 0; i < m_; ++i) {
      const int k = n_ + i;
      switch (s.lp_.rows[i].sense) {
        case RowSense::kLessEqual: lo_[k] = 0.0; hi_[k] = kInf; break;
        case RowSense::kGreaterEqual: lo_[k] = -kInf; hi_[k] = 0.0; break;
        case RowSense::kEqual: lo_[k] = 0.0; hi_[k] = 0.0; break;
      }
    }
    x_.assign(total_, 0.0);
    pos_.assign(total_, -1);
    status_.assign(total_, VarStatus::kAtLower);
  }

  LpSolution run(const Basis* warm) {
    for (int j = 0; j < n_; ++j) {
      if (lo_[j] > hi_[j]) return finish(LpStatus::kInfeasible, Eigen::VectorXd::Zero(m_));
    }
    if (m_ == 0) return solve_bounds_only();

    bool warm_ok = false;
    if (warm != nullptr && static_cast<int>(warm->basic.size()) == m_ &&
        static_cast<int>(warm->status.size()) == total_) {
      basic_ = warm->basic;
      status_ = warm->status;
      warm_ok = install_basis();
    }
    if (!warm_ok) {
      slack_basis();
      if (!install_basis()) {
        throw std::runtime_error("slack basis failed to factorize");
      }
    }
    return iterate();
  }

 private:
  double cost(int j) const { return j < n_ ? s_.cost_[j] : 0.0; }

  double dot_column(const Eigen::VectorXd& y, int j) const {
    if (j >= n_) return y[j - n_];
    const auto& c = s_.cols_[j];
    double acc = 0.0;
    for (std::size_t k = 0; k < c.rows.size(); ++k) acc += y[c.rows[k]] * c.values[k];
    return acc;
  }

  void load_column(int j, Eigen::VectorXd& out) const {
    out.setZero(m_);
    if (j >= n_) {
      out[j - n_] = 1.0;
      return;
    }
    const auto& c = s_.cols_[j];
    for (std::size_t k = 0; k < c.rows.size(); ++k) out[c.rows[k]] = c.values[k];
  }

  void place_nonbasic(int j) {
    VarStatus st = status_[j];
    const bool has_lo = std::isfinite(lo_[j]);
    const bool has_hi = std::isfinite(hi_[j]);
    if (st == VarStatus::kAtLower && !has_lo) st = has_hi ? VarStatus::kAtUpper : VarStatus::kFree;
    if (st == VarStatus::kAtUpper && !has_hi) st = has_lo ? VarStatus::kAtLower : VarStatus::kFree;
    if (st == VarStatus::kFree && has_lo) st = VarStatus::kAtLower;
    if (st == VarStatus::kFree && has_hi) st = VarStatus::kAtUpper;
    status_[j] = st;
    x_[j] = st == VarStatus::kAtLower ? lo_[j] : st == VarStatus::kAtUpper ? hi_[j] : 0.0;
  }

  void slack_basis() {
    basic_.resize(m_);
    for (int j = 0; j < n_; ++j) status_[j] = VarStatus::kAtLower;
    for (int i = 0; i < m_; ++i) {
      basic_[i] = n_ + i;
      status_[n_ + i] = VarStatus::kBasic;
    }
  }

  bool install_basis() {
    std::fill(pos_.begin(), pos_.end(), -1);
    for (int i = 0; i < m_; ++i) {
      const int v = basic_[i];
      if (v < 0 || v >= total_ || pos_[v] != -1) return false;
      pos_[v] = i;
    }
    for (int j = 0; j < total_; ++j) {
      if (pos_[j] >= 0) {
        status_[j] = VarStatus::kBasic;
      } else {
        if (status_[j] == VarStatus::kBasic) status_[j] = VarStatus::kAtLower;
        place_nonbasic(j);
      }
    }
    return refactor();
  }

  bool refactor() {
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(m_) * 4);
    for (int i = 0; i < m_; ++i) {
      const int v = basic_[i];
      if (v >= n_) {
        trip.emplace_back(v - n_, i, 1.0);
      } else {
        const auto& c = s_.cols_[v];
        for (std::size_t k = 0; k < c.rows.size(); ++k) trip.emplace_back(c.rows[k], i, c.values[k]);
      }
    }
    Eigen::SparseMatrix<double> b(m_, m_);
    b.setFromTriplets(trip.begin(), trip.end());
    b.makeCompressed();
    lu_.analyzePattern(b);
    lu_.factorize(b);
    if (lu_.info() != Eigen::Success) return false;
    etas_.clear();
    recompute_basics();
    return true;
  }

  void recompute_basics() {
    Eigen::VectorXd r(m_);
    for (int i = 0; i < m_; ++i) r[i] = s_.rhs_[i];
    for (int j = 0; j < total_; ++j) {
      if (pos_[j] >= 0 || x_[j] == 0.0) continue;
      if (j >= n_) {
        r[j - n_] -= x_[j];
      } else {
        const auto& c = s_.cols_[j];
        for (std::size_t k = 0; k < c.rows.size(); ++k) r[c.rows[k]] -= c.values[k] * x_[j];
      }
    }
    Eigen::VectorXd xb = ftran(r);
    for (int i = 0; i < m_; ++i) x_[basic_[i]] = xb[i];
  }

  Eigen::VectorXd ftran(const Eigen::VectorXd& v) {
    Eigen::VectorXd out = lu_.solve(v);
    for (const auto& eta : etas_) {
      const double xr = out[eta.row] / eta.alpha[eta.row];
      out -= xr * eta.alpha;
      out[eta.row] = xr;
    }
    return out;
  }

  Eigen::VectorXd btran(Eigen::VectorXd v) {
    for (auto it = etas_.rbegin(); it != etas_.rend(); ++it) {
      const double ar = it->alpha[it->row];
      const double others = it->alpha.dot(v) - ar * v[it->row];
      v[it->row] = (v[it->row] - others) / ar;
    }
    return lu_.transpose().solve(v);
  }

  LpSolution solve_bounds_only() {
    for (int j = 0; j < n_; ++j) {
      const double c = cost(j);
      if (c > 0.0) {
        if (!std::isfinite(lo_[j])) return finish(LpStatus::kUnbounded, Eigen::VectorXd());
        x_[j] = lo_[j];
        status_[j] = VarStatus::kAtLower;
      } else if (c < 0.0) {
        if (!std::isfinite(hi_[j])) return finish(LpStatus::kUnbounded, Eigen::VectorXd());
        x_[j] = hi_[j];
        status_[j] = VarStatus::kAtUpper;
      } else {
        place_nonbasic(j);
      }
    }
    basic_.clear();
    return finish(LpStatus::kOptimal, Eigen::VectorXd());
  }

  LpSolution iterate() {
    const double ftol = opt_.feasibility_tol;
    bool verified = false;
    Eigen::VectorXd cb(m_), alpha(m_), col(m_);
    for (;;) {
      if (pivots_ >= opt_.max_iterations) return finish(LpStatus::kIterationLimit, Eigen::VectorXd::Zero(m_));
      if (static_cast<int>(etas_.size()) >= opt_.refactor_interval) {
        if (!refactor()) return finish(LpStatus::kIterationLimit, Eigen::VectorXd::Zero(m_));
      }

      bool phase_one = false;
      for (int i = 0; i < m_; ++i) {
        const int v = basic_[i];
        const double xv = x_[v];
        if (xv < lo_[v] - ftol) {
          cb[i] = -1.0;
          phase_one = true;
        } else if (xv > hi_[v] + ftol) {
          cb[i] = 1.0;
          phase_one = true;
        } else {
          cb[i] = 0.0;
        }
      }
      if (!phase_one) {
        for (int i = 0; i < m_; ++i) cb[i] = cost(basic_[i]);
      }
      const Eigen::VectorXd y = btran(cb);
      const double dtol = opt_.optimality_tol * (phase_one ? 1.0 : s_.cost_norm_);

      // Pricing: Dantzig, or lowest eligible index under Bland's rule.
      int q = -1;
      int dir = 0;
      double best = 0.0;
      for (int j = 0; j < total_; ++j) {
        const VarStatus st = status_[j];
        if (st == VarStatus::kBasic || lo_[j] == hi_[j]) continue;
        const double d = (phase_one ? 0.0 : cost(j)) - dot_column(y, j);
        int jd = 0;
        if (st == VarStatus::kAtLower && d < -dtol) jd = 1;
        else if (st == VarStatus::kAtUpper && d > dtol) jd = -1;
        else if (st == VarStatus::kFree && std::abs(d) > dtol) jd = d < 0 ? 1 : -1;
        if (jd == 0) continue;
        if (bland_) {
          q = j;
          dir = jd;
          break;
        }
        if (std::abs(d) > best) {
          best = std::abs(d);
          q = j;
          dir = jd;
        }
      }

      if (q < 0) {
        if (!verified && !etas_.empty()) {
          if (!refactor()) return finish(LpStatus::kIterationLimit, Eigen::VectorXd::Zero(m_));
          verified = true;
          continue;
        }
        if (phase_one) return finish(LpStatus::kInfeasible, Eigen::VectorXd::Zero(m_));
        return finish(LpStatus::kOptimal, y);
      }
      verified = false;

      load_column(q, col);
      alpha = ftran(col);

      // Harris two-pass ratio test. In phase one an infeasible basic
      // variable blocks when it reaches the bound it violates.
      double relaxed_max = kInf;
      for (int i = 0; i < m_; ++i) {
        const double a = alpha[i];
        if (std::abs(a) <= opt_.pivot_tol) continue;
        const int v = basic_[i];
        const double rate = -dir * a;
        const double target = blocking_target(v, rate);
        if (!std::isfinite(target)) continue;
        const double slack = rate < 0 ? x_[v] - target + ftol : target - x_[v] + ftol;
        relaxed_max = std::min(relaxed_max, std::max(slack, 0.0) / std::abs(rate));
      }

      int leave_row = -1;
      double step = kInf;
      double leave_target = 0.0;
      double best_pivot = 0.0;
      for (int i = 0; i < m_; ++i) {
        const double a = alpha[i];
        if (std::abs(a) <= opt_.pivot_tol) continue;
        const int v = basic_[i];
        const double rate = -dir * a;
        const double target = blocking_target(v, rate);
        if (!std::isfinite(target)) continue;
        const double t = std::max(0.0, (target - x_[v]) / rate);
        if (bland_) {
          if (t < step - 1e-12 || (t <= step + 1e-12 && leave_row >= 0 && v < basic_[leave_row])) {
            step = t;
            leave_row = i;
            leave_target = target;
          }
        } else if (t <= relaxed_max && std::abs(a) > best_pivot) {
          best_pivot = std::abs(a);
          step = t;
          leave_row = i;
          leave_target = target;
        }
      }

      const bool bounded_entering = std::isfinite(lo_[q]) && std::isfinite(hi_[q]);
      const double flip = bounded_entering ? hi_[q] - lo_[q] : kInf;
      if (leave_row < 0 && !std::isfinite(flip)) {
        if (!phase_one) return finish(LpStatus::kUnbounded, Eigen::VectorXd::Zero(m_));
        // Should not happen in phase one; refactor to clear drift.
        if (!refactor()) return finish(LpStatus::kIterationLimit, Eigen::VectorXd::Zero(m_));
        ++pivots_;
        continue;
      }

      const bool do_flip = flip <= step;
      if (do_flip) step = flip;

      for (int i = 0; i < m_; ++i) x_[basic_[i]] -= dir * step * alpha[i];
      x_[q] += dir * step;
      ++pivots_;

      if (step <= 1e-12) {
        if (++degenerate_run_ >= opt_.bland_after_degenerate) bland_ = true;
      } else {
        degenerate_run_ = 0;
        bland_ = false;
      }

      if (do_flip) {
        if (dir > 0) {
          status_[q] = VarStatus::kAtUpper;
          x_[q] = hi_[q];
        } else {
          status_[q] = VarStatus::kAtLower;
          x_[q] = lo_[q];
        }
        continue;
      }

      const int leaving = basic_[leave_row];
      x_[leaving] = leave_target;
      if (leave_target == lo_[leaving]) status_[leaving] = VarStatus::kAtLower;
      else status_[leaving] = VarStatus::kAtUpper;
      pos_[leaving] = -1;
      basic_[leave_row] = q;
      pos_[q] = leave_row;
      status_[q] = VarStatus::kBasic;
      etas_.push_back({leave_row, alpha});
    }
  }

  // Bound a basic variable runs into when it moves at the given rate, or
  // +inf when it never blocks.
  double blocking_target(int v, double rate) const {
    const double ftol = opt_.feasibility_tol;
    const double xv = x_[v];
    if (rate < 0) {
      if (xv < lo_[v] - ftol) return kInf;
      if (xv > hi_[v] + ftol) return hi_[v];
      return std::isfinite(lo_[v]) ? lo_[v] : kInf;
    }
    if (xv > hi_[v] + ftol) return kInf;
    if (xv < lo_[v] - ftol) return lo_[v];
    return std::isfinite(hi_[v]) ? hi_[v] : kInf;
  }

  LpSolution finish(LpStatus status, const Eigen::VectorXd& y_scaled) {
    LpSolution out;
    out.status = status;
    out.pivots = pivots_;
    out.x.resize(n_);
    for (int j = 0; j < n_; ++j) out.x[j] = x_[j] * s_.col_scale_[j];
    out.row_duals.assign(m_, 0.0);
    if (status == LpStatus::kOptimal && y_scaled.size() == m_) {
      for (int i = 0; i < m_; ++i) out.row_duals[i] = y_scaled[i] * s_.row_scale_[i];
    }
    out.value = s_.lp_.evaluate_objective(out.x);
    if (status == LpStatus::kOptimal) {
      out.reduced_costs.assign(n_, 0.0);
      for (int j = 0; j < n_; ++j) out.reduced_costs[j] = s_.lp_.objective[j];
      for (int i = 0; i < m_; ++i) {
        for (const auto& e : s_.lp_.rows[i].entries) {
          out.reduced_costs[e.col] -= out.row_duals[i] * e.value;
        }
      }
    } else if (status == LpStatus::kInfeasible) {
      out.value = kInf;
    } else if (status == LpStatus::kUnbounded) {
      out.value = -kInf;
    }
    out.basis.basic = basic_;
    out.basis.status = status_;
    return out;
  }

  struct Eta {
    int row;
    Eigen::VectorXd alpha;
  };

  const SimplexSolver& s_;
  const LpOptions& opt_;
  const int n_;
  const int m_;
  const int total_;
  std::vector<double> lo_, hi_, x_;
  std::vector<int> basic_;
  std::vector<int> pos_;
  std::vector<VarStatus> status_;
  Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu_;
  std::vector<Eta> etas_;
  long pivots_ = 0;
  long degenerate_run_ = 0;
  bool bland_ = false;
};

LpSolution SimplexSolver::solve(const std::vector<VarBounds>& bounds,
                                const Basis* warm_start) const {
  if (static_cast<int>(bounds.size()) != n_) {
    throw std::invalid_argument("bounds vector length differs from num_vars");
  }
  SimplexRun run(*this, bounds);
  return run.run(warm_start);
}

LpSolution solve_lp(const LinearProgram& lp, const LpOptions& options) {
  return SimplexSolver(lp, options).solve();
}

}  // namespace igbd::milp
