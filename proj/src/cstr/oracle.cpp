#include "igbd/cstr/oracle.hpp"

#include <algorithm>
#include <cstdio>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>

#include "igbd/milp/simplex.hpp"
#include "igbd/util/cpu_timer.hpp"
#include "igbd/util/format.hpp"

namespace igbd::cstr {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

}  // namespace

double sequence_profit(const InstanceParams& params, const std::vector<int>& seq, double total_transition_time,
                       long* lp_solves) {
  const auto& tab = params.table;
  const int np = params.n_products;
  const int ns = static_cast<int>(seq.size());
  if (total_transition_time > params.horizon) return kNegInf;

  milp::LinearProgram lp;
  std::vector<int> prod(ns);
  std::vector<std::vector<int>> sales(np, std::vector<int>(ns)), inv(np, std::vector<int>(ns));
  for (int k = 0; k < ns; ++k) {
    const auto& p = tab.products[seq[k]];
    prod[k] = lp.add_variable(0.0, params.horizon, p.op_cost * p.rate);
  }
  for (int i = 0; i < np; ++i) {
    for (int k = 0; k < ns; ++k) {
      sales[i][k] = lp.add_variable(0.0, milp::kInf, -tab.products[i].price);
      inv[i][k] = lp.add_variable(0.0, milp::kInf, params.c_inv);
    }
  }
  std::vector<milp::Entry> time_row;
  for (int k = 0; k < ns; ++k) time_row.push_back({prod[k], 1.0});
  lp.add_row(time_row, milp::RowSense::kLessEqual, params.horizon - total_transition_time);
  for (int i = 0; i < np; ++i) {
    for (int k = 0; k < ns; ++k) {
      // I_ik - I_i,k-1 - r_i Theta_k [seq_k = i] + S_ik = I0 [k = 0]
      std::vector<milp::Entry> e{{inv[i][k], 1.0}, {sales[i][k], 1.0}};
      if (k > 0) e.push_back({inv[i][k - 1], -1.0});
      if (seq[k] == i) e.push_back({prod[k], -tab.products[i].rate});
      lp.add_row(e, milp::RowSense::kEqual, k == 0 ? tab.products[i].inv0 : 0.0);
    }
    lp.add_row({{sales[i][ns - 1], 1.0}}, milp::RowSense::kGreaterEqual, params.demands[i]);
  }
  const auto sol = milp::solve_lp(lp);
  if (lp_solves != nullptr) ++*lp_solves;
  if (sol.status != milp::LpStatus::kOptimal) return kNegInf;
  double fixed = 0.0;
  for (int k = 0; k + 1 < ns; ++k) fixed += tab.transition_cost[seq[k]][seq[k + 1]];
  return -sol.value - fixed;
}

OracleResult monolithic_oracle(const InstanceParams& params, const OracleOptions& options) {
  params.validate();
  const int np = params.n_products;
  if (np > 4) throw std::invalid_argument("monolithic oracle enumerates N_p! sequences; N_p <= 4 required");
  if (options.grid_points < 2) throw std::invalid_argument("grid needs at least two points");
  CpuTimer timer;
  const auto& tab = params.table;
  const int P = options.grid_points;
  const double step = options.grid_span / (P - 1);

  OracleResult best;
  best.objective = kNegInf;

  // Transition cost on the grid per arc (from = -1: intermediate state).
  std::map<std::pair<int, int>, std::vector<double>> grid_cost;
  auto arc_costs = [&](int from, int to) -> const std::vector<double>& {
    auto it = grid_cost.find({from, to});
    if (it != grid_cost.end()) return it->second;
    const auto spec = from < 0 ? intermediate_spec(tab, params.c0, to, params.alpha_u)
                               : transition_spec(tab, from, to, params.alpha_u);
    const double lo = from < 0 ? tab.theta_hat_min[to] : tab.theta_min[from][to];
    std::vector<double> v(P, milp::kInf);
    for (int n = 0; n < P; ++n) {
      const double th = lo + n * step;
      if (th > params.theta_max + 1e-12) break;
      const auto r = nlp::solve_transition(spec, th, options.nlp);
      ++best.nlp_solves;
      if (r.status == nlp::TransitionStatus::kConverged) v[n] = r.value;
    }
    return grid_cost.emplace(std::make_pair(from, to), std::move(v)).first->second;
  };

  std::vector<int> seq(np);
  std::iota(seq.begin(), seq.end(), 0);
  do {
    std::vector<std::pair<int, int>> arcs{{-1, seq[0]}};
    for (int k = 0; k + 1 < np; ++k) arcs.push_back({seq[k], seq[k + 1]});
    const int m = static_cast<int>(arcs.size());
    double base = 0.0;
    for (const auto& [i, j] : arcs) base += i < 0 ? tab.theta_hat_min[j] : tab.theta_min[i][j];

    // stage[t][n]: least cost of the first t arcs with grid offsets summing to n.
    std::vector<std::vector<double>> stage(m + 1);
    stage[0] = {0.0};
    for (int t = 0; t < m; ++t) {
      const auto& c = arc_costs(arcs[t].first, arcs[t].second);
      stage[t + 1].assign(stage[t].size() + P - 1, milp::kInf);
      for (std::size_t a = 0; a < stage[t].size(); ++a) {
        if (stage[t][a] == milp::kInf) continue;
        for (int q = 0; q < P; ++q) {
          if (c[q] != milp::kInf) stage[t + 1][a + q] = std::min(stage[t + 1][a + q], stage[t][a] + c[q]);
        }
      }
    }

    const auto& dp = stage[m];
    for (int n = 0; n < static_cast<int>(dp.size()); ++n) {
      if (dp[n] == milp::kInf) continue;
      const double phi1 = sequence_profit(params, seq, base + n * step, &best.lp_solves);
      if (phi1 == kNegInf || phi1 - dp[n] <= best.objective) continue;
      best.objective = phi1 - dp[n];
      best.phi1 = phi1;
      best.sequence = seq;
      best.transition_times.assign(m, 0.0);
      best.transition_values.assign(m, 0.0);
      int rest = n;
      for (int t = m - 1; t >= 0; --t) {
        const auto& c = arc_costs(arcs[t].first, arcs[t].second);
        int pick = -1;
        for (int q = 0; q < P && q <= rest; ++q) {
          const int a = rest - q;
          if (a < static_cast<int>(stage[t].size()) && c[q] != milp::kInf && stage[t][a] + c[q] == stage[t + 1][rest]) {
            pick = q;
            break;
          }
        }
        const auto [i, j] = arcs[t];
        best.transition_times[t] = (i < 0 ? tab.theta_hat_min[j] : tab.theta_min[i][j]) + pick * step;
        best.transition_values[t] = c[pick];
        rest -= pick;
      }
    }
  } while (std::next_permutation(seq.begin(), seq.end()));
  best.cpu_time = timer.seconds();
  return best;
}

nlohmann::json to_json(const OracleResult& r) {
  return {{"schema", "igbd.oracle.v1"},
          {"objective", json_number(r.objective)},
          {"sequence", r.sequence},
          {"transition_times", r.transition_times},
          {"transition_values", r.transition_values},
          {"phi1", json_number(r.phi1)},
          {"lp_solves", r.lp_solves},
          {"nlp_solves", r.nlp_solves},
          {"cpu_time", r.cpu_time}};
}

OracleResult oracle_result_from_json(const nlohmann::json& j) {
  if (j.value("schema", "") != "igbd.oracle.v1") throw std::invalid_argument("not an igbd.oracle.v1 document");
  OracleResult r;
  r.objective = json_to_double(j.at("objective"));
  r.sequence = j.at("sequence").get<std::vector<int>>();
  r.transition_times = j.at("transition_times").get<std::vector<double>>();
  r.transition_values = j.at("transition_values").get<std::vector<double>>();
  r.phi1 = json_to_double(j.at("phi1"));
  r.lp_solves = j.at("lp_solves").get<long>();
  r.nlp_solves = j.at("nlp_solves").get<long>();
  r.cpu_time = j.at("cpu_time").get<double>();
  return r;
}

std::string instance_hash(const InstanceParams& params) {
  // FNV-1a over the canonical JSON dump.
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : to_json(params).dump()) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace igbd::cstr
