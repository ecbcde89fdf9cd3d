#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "igbd/gbd/igbd.hpp"
#include "igbd/rl/ppo.hpp"

namespace igbd::bench {

enum class Method { kRl, kRand, kExp, kClassic };

std::string to_string(Method m);
Method method_from_string(const std::string& s);
std::vector<Method> methods_from_list(const std::string& comma_separated);

// Case study with case_np products, or the convex family of dimension
// convex_dim when case_np is 0.
struct Family {
  int case_np = 0;
  int convex_dim = 0;
  std::string data_dir;
  // Overrides the table's n_fe when positive.
  int n_fe = 0;

  std::string name() const;
  int case_tag() const { return case_np; }
  void validate() const;
  std::unique_ptr<gbd::DecomposedProblem> make(std::uint64_t seed) const;
  rl::ProblemSampler sampler() const;
};

Family case_family(int n_products, const std::string& data_dir = "");
Family convex_family(int dim);

// Instance i of a sweep with base seed s: paired across methods.
std::uint64_t instance_seed(std::uint64_t base, int index);

// "igbd.convex.v1": {dim, seed}; "igbd.instance.v1": a case-study instance.
std::unique_ptr<gbd::DecomposedProblem> problem_from_json(const nlohmann::json& j, const std::string& data_dir = "");

struct RunConfig {
  Family family;
  std::vector<Method> methods{Method::kRl, Method::kRand, Method::kExp, Method::kClassic};
  int n_instances = 50;
  std::uint64_t seed = 1;
  gbd::IgbdOptions igbd{};
  double alpha_exp = 0.8;
  std::string policy_path;
};

std::unique_ptr<gbd::TolerancePolicy> make_tolerance_policy(Method m, const RunConfig& config,
                                                            const rl::PolicyParams* learned);

struct BenchRow {
  std::string method;
  int index = 0;
  std::uint64_t seed = 0;
  std::string instance_id;
  bool converged = false;
  bool truncated = false;
  bool failed = false;
  int iterations = 0;
  double objective = 0.0;
  double final_gap = 0.0;
  double t_mp = 0.0;
  double t_total = 0.0;
  long pivots = 0;
  long nodes = 0;
  std::string diagnostic;
};

struct MethodSummary {
  std::string method;
  int n = 0;
  int converged = 0;
  int failed = 0;
  double median_iterations = 0.0;
  double mean_t_total = 0.0, std_t_total = 0.0;
  double mean_t_mp = 0.0, std_t_mp = 0.0;
  double mean_pivots = 0.0, std_pivots = 0.0, median_pivots = 0.0;
  double mean_nodes = 0.0, std_nodes = 0.0;
};

struct BenchReport {
  std::string family;
  std::uint64_t seed = 0;
  int n_instances = 0;
  std::vector<BenchRow> rows;
  std::vector<MethodSummary> summaries;
};

// Runs one method on one instance. Solver exceptions become a failed row.
BenchRow run_one(Method m, const RunConfig& config, int index, const rl::PolicyParams* learned,
                 gbd::SolveTrace* trace = nullptr);

// Statistics of the non-failed rows of one method.
MethodSummary summarize(const std::string& method, const std::vector<BenchRow>& rows);

BenchReport run_bench(const RunConfig& config, const rl::PolicyParams* learned,
                      const std::function<void(const BenchRow&)>& progress = {});

std::string rows_csv(const std::vector<BenchRow>& rows);
std::vector<BenchRow> rows_from_csv(const std::string& text);
// method,instance,t_total,t_MP,nodes,pivots
std::string long_csv(const std::vector<BenchRow>& rows);

// Schema "igbd.bench.v1".
nlohmann::json to_json(const BenchReport& r);
BenchReport bench_report_from_json(const nlohmann::json& j);

}  // namespace igbd::bench
