#pragma once

#include <map>
#include <string>
#include <vector>

#include "igbd/cstr/instance.hpp"
#include "igbd/gbd/problem.hpp"
#include "igbd/milp/linear_program.hpp"

namespace igbd::cstr {

// Column indices of every block of the scheduling master. Products i, j and
// slots k are 0-based; transitions run in slots k = 0..N_s-2.
struct ScheduleMasterSpec {
  int n_p = 0;
  int n_s = 0;

  std::vector<int> y;            // y[i][k]
  std::vector<int> z;            // z[k][i][j]
  std::vector<int> z_hat;        // z_hat[i]
  std::vector<int> prod_time;    // Theta[i][k]
  std::vector<int> theta;        // theta[k][i][j]
  std::vector<int> theta_hat;    // theta_hat[i]
  std::vector<int> theta_t;      // theta_t[k], k < N_s - 1
  std::vector<int> t_start;      // T^s[k]
  std::vector<int> t_end;        // T^e[k]
  std::vector<int> inventory;    // I[i][k]
  std::vector<int> production;   // q[i][k]
  std::vector<int> sales;        // S[i][k]
  std::vector<int> eta;          // eta[k][i][j]
  std::vector<int> eta_hat;      // eta_hat[i]
  std::vector<int> w_eta;        // eta * z
  std::vector<int> w_eta_hat;    // eta_hat * z_hat
  std::vector<int> w_theta;      // theta * z
  std::vector<int> w_theta_hat;  // theta_hat * z_hat

  double eta_upper = 0.0;  // shared McCormick bound on every eta

  int ik(int i, int k) const { return i * n_s + k; }
  int kij(int k, int i, int j) const { return (k * n_p + i) * n_p + j; }

  // Subproblem ids: transitions first in kij order, then the intermediate
  // transitions to product i at n_trans() + i.
  int n_trans() const { return n_p * n_p * (n_s - 1); }
  int num_subproblems() const { return n_trans() + n_p; }
  int eta_column(int sub) const;
  int theta_column(int sub) const;
  int z_column(int sub) const;

  // Block name -> columns, covering every variable of the model.
  std::map<std::string, std::vector<int>> blocks() const;
};

struct ScheduleMaster {
  milp::MilpModel model;
  ScheduleMasterSpec spec;
};

// Minimization of -(Phi_1 - sum w_eta - sum w_eta_hat) with every bilinear
// product replaced by its McCormick envelope. Cuts refer to subproblem ids
// of the spec.
ScheduleMaster build_master(const InstanceParams& params, const std::vector<gbd::BendersCut>& cuts = {});

// Appends the four envelope rows of w = a * z for a in [a_lo, a_hi] and
// binary z.
void add_mccormick(milp::MilpModel& model, int w, int a, int z, double a_lo, double a_hi);

// Schedule read back from a master point.
struct Schedule {
  std::vector<int> sequence;              // product per slot
  std::vector<double> production_time;    // per slot
  std::vector<double> transition_time;    // theta_t per slot (last is 0)
  double intermediate_time = 0.0;         // theta_hat of the first product
  std::vector<double> slot_start, slot_end;
  std::vector<std::vector<double>> sales;      // [i][k]
  std::vector<std::vector<double>> inventory;  // [i][k]
  // (from, to) per slot transition, from = -1 for the intermediate one.
  std::vector<std::pair<int, int>> transitions;
  std::vector<double> transition_durations;
};

Schedule decode_schedule(const ScheduleMasterSpec& spec, const std::vector<double>& x);

// Phi_1 recomputed from the schedule.
double schedule_profit(const InstanceParams& params, const Schedule& schedule);

}  // namespace igbd::cstr
