#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "igbd/cstr/instance.hpp"
#include "igbd/nlp/transition.hpp"

namespace igbd::cstr {

struct OracleOptions {
  // Grid from theta_min to theta_min + grid_span per transition.
  int grid_points = 41;
  double grid_span = 8.0;
  nlp::NlpOptions nlp{};
};

struct OracleResult {
  // Profit Phi_1 minus transition costs (maximization sign).
  double objective = 0.0;
  std::vector<int> sequence;
  // Intermediate transition first, then one per slot boundary.
  std::vector<double> transition_times;
  std::vector<double> transition_values;
  double phi1 = 0.0;
  long lp_solves = 0;
  long nlp_solves = 0;
  double cpu_time = 0.0;
};

// Enumerates all sequences; per sequence the transition times live on the
// grid and the remaining LP in (Theta, I, q, S, T) is solved exactly for
// each achievable total transition time. Requires N_p <= 4.
OracleResult monolithic_oracle(const InstanceParams& params, const OracleOptions& options = {});

// Best Phi_1 of a fixed sequence (fixed transition costs included) when the
// transitions take total_transition_time; -inf when the LP is infeasible.
double sequence_profit(const InstanceParams& params, const std::vector<int>& sequence,
                       double total_transition_time, long* lp_solves = nullptr);

nlohmann::json to_json(const OracleResult& r);
OracleResult oracle_result_from_json(const nlohmann::json& j);

// Stable hex digest of an instance document, used as the oracle cache key.
std::string instance_hash(const InstanceParams& params);

}  // namespace igbd::cstr
