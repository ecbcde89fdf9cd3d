#pragma once

#include <string>
#include <vector>

#include <json.hpp>

namespace igbd::gbd {

struct IterationRecord {
  int l = 0;
  double tol = 0.0;
  double realized = 0.0;
  double master_value = 0.0;
  double master_bound = 0.0;
  double ub = 0.0;
  double tlb = 0.0;
  double gap = 0.0;
  double master_cpu = 0.0;
  double max_subproblem_cpu = 0.0;
  long master_nodes = 0;
  long master_pivots = 0;
  std::string master_status;
  int cuts_added = 0;
};

struct SolveTrace {
  std::string instance_id;
  std::string policy;
  std::vector<IterationRecord> records;
  bool converged = false;
  bool truncated = false;
  bool infeasible = false;
  std::string diagnostic;
  double final_objective = 0.0;
  std::vector<double> final_x;
  double t_mp = 0.0;
  double t_total = 0.0;

  int iterations() const { return static_cast<int>(records.size()); }
  long total_pivots() const;
  long total_nodes() const;
};

// One IterationRecord per row. Floats use 17 significant digits.
std::string trace_csv(const SolveTrace& trace);
std::vector<IterationRecord> records_from_csv(const std::string& text);

// Schema "igbd.trace.v1".
nlohmann::json to_json(const SolveTrace& trace);
SolveTrace trace_from_json(const nlohmann::json& j);

// Canonical text of the deterministic fields (cpu times excluded), used for
// reproducibility digests.
std::string deterministic_fingerprint(const SolveTrace& trace);

}  // namespace igbd::gbd
