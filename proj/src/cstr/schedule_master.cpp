#include "igbd/cstr/schedule_master.hpp"

#include <cmath>
#include <stdexcept>

namespace igbd::cstr {

using milp::Entry;
using milp::IntegerKind;
using milp::RowSense;

int ScheduleMasterSpec::eta_column(int sub) const {
  if (sub < 0 || sub >= num_subproblems()) throw std::out_of_range("subproblem id");
  return sub < n_trans() ? eta[sub] : eta_hat[sub - n_trans()];
}

int ScheduleMasterSpec::theta_column(int sub) const {
  if (sub < 0 || sub >= num_subproblems()) throw std::out_of_range("subproblem id");
  return sub < n_trans() ? theta[sub] : theta_hat[sub - n_trans()];
}

int ScheduleMasterSpec::z_column(int sub) const {
  if (sub < 0 || sub >= num_subproblems()) throw std::out_of_range("subproblem id");
  return sub < n_trans() ? z[sub] : z_hat[sub - n_trans()];
}

std::map<std::string, std::vector<int>> ScheduleMasterSpec::blocks() const {
  return {{"y", y},
          {"z", z},
          {"z_hat", z_hat},
          {"Theta", prod_time},
          {"theta", theta},
          {"theta_hat", theta_hat},
          {"theta_t", theta_t},
          {"T_start", t_start},
          {"T_end", t_end},
          {"I", inventory},
          {"q", production},
          {"S", sales},
          {"eta", eta},
          {"eta_hat", eta_hat},
          {"w_eta", w_eta},
          {"w_eta_hat", w_eta_hat},
          {"w_theta", w_theta},
          {"w_theta_hat", w_theta_hat}};
}

void add_mccormick(milp::MilpModel& m, int w, int a, int z, double a_lo, double a_hi) {
  m.lp.add_row({{w, 1.0}, {z, -a_lo}}, RowSense::kGreaterEqual, 0.0);
  m.lp.add_row({{w, 1.0}, {a, -1.0}, {z, -a_hi}}, RowSense::kGreaterEqual, -a_hi);
  m.lp.add_row({{w, 1.0}, {z, -a_hi}}, RowSense::kLessEqual, 0.0);
  m.lp.add_row({{w, 1.0}, {a, -1.0}, {z, -a_lo}}, RowSense::kLessEqual, -a_lo);
}

ScheduleMaster build_master(const InstanceParams& params, const std::vector<gbd::BendersCut>& cuts) {
  params.validate();
  const auto& tab = params.table;
  const int np = params.n_products;
  const int ns = np;
  const double H = params.horizon;
  const double th_max = params.theta_max;

  ScheduleMaster out;
  auto& m = out.model;
  auto& s = out.spec;
  s.n_p = np;
  s.n_s = ns;
  const double df = tab.bounds.f_hi - tab.bounds.f_lo;
  s.eta_upper = params.alpha_u * th_max * df * df;

  const int nt = s.n_trans();
  auto binary = [&](double cost) { return m.add_variable(0.0, 1.0, cost, IntegerKind::kBinary); };
  auto cont = [&](double lo, double hi, double cost) { return m.add_variable(lo, hi, cost); };

  s.y.resize(np * ns);
  for (int i = 0; i < np; ++i) {
    for (int k = 0; k < ns; ++k) s.y[s.ik(i, k)] = binary(0.0);
  }
  s.z.resize(nt);
  for (int k = 0; k + 1 < ns; ++k) {
    for (int i = 0; i < np; ++i) {
      for (int j = 0; j < np; ++j) s.z[s.kij(k, i, j)] = binary(tab.transition_cost[i][j]);
    }
  }
  for (int i = 0; i < np; ++i) s.z_hat.push_back(binary(0.0));

  s.prod_time.resize(np * ns);
  s.production.resize(np * ns);
  s.sales.resize(np * ns);
  s.inventory.resize(np * ns);
  for (int i = 0; i < np; ++i) {
    const auto& p = tab.products[i];
    const double qmax = p.rate * H;
    for (int k = 0; k < ns; ++k) {
      s.prod_time[s.ik(i, k)] = cont(0.0, H, 0.0);
      s.production[s.ik(i, k)] = cont(0.0, qmax, p.op_cost);
      s.sales[s.ik(i, k)] = cont(0.0, p.inv0 + qmax, -p.price);
      s.inventory[s.ik(i, k)] = cont(0.0, p.inv0 + qmax, params.c_inv);
    }
  }
  s.theta.resize(nt);
  s.eta.resize(nt);
  s.w_eta.resize(nt);
  s.w_theta.resize(nt);
  for (int k = 0; k + 1 < ns; ++k) {
    for (int i = 0; i < np; ++i) {
      for (int j = 0; j < np; ++j) {
        const int t = s.kij(k, i, j);
        s.theta[t] = cont(tab.theta_min[i][j], th_max, 0.0);
        s.eta[t] = cont(0.0, s.eta_upper, 0.0);
        s.w_eta[t] = cont(0.0, s.eta_upper, 1.0);
        s.w_theta[t] = cont(0.0, th_max, 0.0);
      }
    }
  }
  for (int i = 0; i < np; ++i) {
    s.theta_hat.push_back(cont(tab.theta_hat_min[i], th_max, 0.0));
    s.eta_hat.push_back(cont(0.0, s.eta_upper, 0.0));
    s.w_eta_hat.push_back(cont(0.0, s.eta_upper, 1.0));
    s.w_theta_hat.push_back(cont(0.0, th_max, 0.0));
  }
  for (int k = 0; k + 1 < ns; ++k) s.theta_t.push_back(cont(0.0, H, 0.0));
  for (int k = 0; k < ns; ++k) {
    s.t_start.push_back(cont(0.0, k == 0 ? 0.0 : H, 0.0));
    s.t_end.push_back(cont(0.0, H, 0.0));
  }

  // Assignment and transition logic.
  for (int i = 0; i < np; ++i) {
    std::vector<Entry> e;
    for (int k = 0; k < ns; ++k) e.push_back({s.y[s.ik(i, k)], 1.0});
    m.lp.add_row(std::move(e), RowSense::kEqual, 1.0);
  }
  for (int k = 0; k < ns; ++k) {
    std::vector<Entry> e;
    for (int i = 0; i < np; ++i) e.push_back({s.y[s.ik(i, k)], 1.0});
    m.lp.add_row(std::move(e), RowSense::kEqual, 1.0);
  }
  for (int i = 0; i < np; ++i) {
    m.lp.add_row({{s.z_hat[i], 1.0}, {s.y[s.ik(i, 0)], -1.0}}, RowSense::kEqual, 0.0);
  }
  for (int k = 0; k + 1 < ns; ++k) {
    for (int i = 0; i < np; ++i) {
      for (int j = 0; j < np; ++j) {
        const int zc = s.z[s.kij(k, i, j)];
        const int yi = s.y[s.ik(i, k)];
        const int yj = s.y[s.ik(j, k + 1)];
        m.lp.add_row({{zc, 1.0}, {yi, -1.0}, {yj, -1.0}}, RowSense::kGreaterEqual, -1.0);
        m.lp.add_row({{zc, 1.0}, {yi, -1.0}}, RowSense::kLessEqual, 0.0);
        m.lp.add_row({{zc, 1.0}, {yj, -1.0}}, RowSense::kLessEqual, 0.0);
      }
    }
  }

  // Timing.
  for (int k = 0; k + 1 < ns; ++k) {
    m.lp.add_row({{s.t_start[k + 1], 1.0}, {s.t_end[k], -1.0}}, RowSense::kEqual, 0.0);
  }
  for (int k = 0; k < ns; ++k) {
    std::vector<Entry> e{{s.t_end[k], 1.0}, {s.t_start[k], -1.0}};
    for (int i = 0; i < np; ++i) e.push_back({s.prod_time[s.ik(i, k)], -1.0});
    if (k + 1 < ns) e.push_back({s.theta_t[k], -1.0});
    m.lp.add_row(std::move(e), RowSense::kEqual, 0.0);
  }
  for (int i = 0; i < np; ++i) {
    for (int k = 0; k < ns; ++k) {
      m.lp.add_row({{s.prod_time[s.ik(i, k)], 1.0}, {s.y[s.ik(i, k)], -H}}, RowSense::kLessEqual, 0.0);
    }
  }
  for (int k = 0; k + 1 < ns; ++k) {
    std::vector<Entry> e{{s.theta_t[k], 1.0}};
    for (int i = 0; i < np; ++i) {
      for (int j = 0; j < np; ++j) e.push_back({s.w_theta[s.kij(k, i, j)], -1.0});
    }
    if (k == 0) {
      for (int i = 0; i < np; ++i) e.push_back({s.w_theta_hat[i], -1.0});
    }
    m.lp.add_row(std::move(e), RowSense::kEqual, 0.0);
  }

  // Inventory.
  for (int i = 0; i < np; ++i) {
    const auto& p = tab.products[i];
    for (int k = 0; k < ns; ++k) {
      const int c = s.ik(i, k);
      m.lp.add_row({{s.production[c], 1.0}, {s.prod_time[c], -p.rate}}, RowSense::kEqual, 0.0);
      std::vector<Entry> e{{s.inventory[c], 1.0}, {s.production[c], -1.0}, {s.sales[c], 1.0}};
      if (k > 0) e.push_back({s.inventory[s.ik(i, k - 1)], -1.0});
      m.lp.add_row(std::move(e), RowSense::kEqual, k == 0 ? p.inv0 : 0.0);
    }
    m.lp.add_row({{s.sales[s.ik(i, ns - 1)], 1.0}}, RowSense::kGreaterEqual, params.demands[i]);
  }

  // McCormick envelopes of every bilinear term.
  for (int k = 0; k + 1 < ns; ++k) {
    for (int i = 0; i < np; ++i) {
      for (int j = 0; j < np; ++j) {
        const int t = s.kij(k, i, j);
        add_mccormick(m, s.w_eta[t], s.eta[t], s.z[t], 0.0, s.eta_upper);
        add_mccormick(m, s.w_theta[t], s.theta[t], s.z[t], tab.theta_min[i][j], th_max);
      }
    }
  }
  for (int i = 0; i < np; ++i) {
    add_mccormick(m, s.w_eta_hat[i], s.eta_hat[i], s.z_hat[i], 0.0, s.eta_upper);
    add_mccormick(m, s.w_theta_hat[i], s.theta_hat[i], s.z_hat[i], tab.theta_hat_min[i], th_max);
  }

  for (const auto& cut : cuts) {
    if (cut.point.size() != 1 || cut.slope.size() != 1) throw std::invalid_argument("cut must be scalar");
    const int eta = s.eta_column(cut.subproblem_id);
    const int th = s.theta_column(cut.subproblem_id);
    std::vector<Entry> e{{eta, 1.0}};
    if (cut.slope[0] != 0.0) e.push_back({th, -cut.slope[0]});
    m.lp.add_row(std::move(e), RowSense::kGreaterEqual, cut.value_at_point - cut.slope[0] * cut.point[0]);
  }
  m.validate();
  return out;
}

Schedule decode_schedule(const ScheduleMasterSpec& s, const std::vector<double>& x) {
  Schedule out;
  const int np = s.n_p, ns = s.n_s;
  for (int k = 0; k < ns; ++k) {
    int who = -1;
    for (int i = 0; i < np; ++i) {
      if (x[s.y[s.ik(i, k)]] > 0.5) {
        if (who >= 0) throw std::runtime_error("two products in one slot");
        who = i;
      }
    }
    if (who < 0) throw std::runtime_error("empty slot");
    out.sequence.push_back(who);
    double pt = 0.0;
    for (int i = 0; i < np; ++i) pt += x[s.prod_time[s.ik(i, k)]];
    out.production_time.push_back(pt);
    out.transition_time.push_back(k + 1 < ns ? x[s.theta_t[k]] : 0.0);
    out.slot_start.push_back(x[s.t_start[k]]);
    out.slot_end.push_back(x[s.t_end[k]]);
  }
  out.intermediate_time = x[s.theta_hat[out.sequence[0]]];
  out.transitions.push_back({-1, out.sequence[0]});
  out.transition_durations.push_back(out.intermediate_time);
  for (int k = 0; k + 1 < ns; ++k) {
    const int i = out.sequence[k], j = out.sequence[k + 1];
    out.transitions.push_back({i, j});
    out.transition_durations.push_back(x[s.theta[s.kij(k, i, j)]]);
  }
  out.sales.assign(np, std::vector<double>(ns));
  out.inventory.assign(np, std::vector<double>(ns));
  for (int i = 0; i < np; ++i) {
    for (int k = 0; k < ns; ++k) {
      out.sales[i][k] = x[s.sales[s.ik(i, k)]];
      out.inventory[i][k] = x[s.inventory[s.ik(i, k)]];
    }
  }
  return out;
}

double schedule_profit(const InstanceParams& params, const Schedule& sch) {
  const auto& tab = params.table;
  const int np = params.n_products;
  double phi = 0.0;
  for (int k = 0; k < np; ++k) {
    const int i = sch.sequence[k];
    phi -= tab.products[i].op_cost * tab.products[i].rate * sch.production_time[k];
  }
  for (int i = 0; i < np; ++i) {
    for (int k = 0; k < np; ++k) {
      phi += tab.products[i].price * sch.sales[i][k] - params.c_inv * sch.inventory[i][k];
    }
  }
  for (int k = 0; k + 1 < np; ++k) phi -= tab.transition_cost[sch.sequence[k]][sch.sequence[k + 1]];
  return phi;
}

}  // namespace igbd::cstr
