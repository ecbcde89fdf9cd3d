#include "igbd/bench/bench.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "igbd/cstr/convex_family.hpp"
#include "igbd/cstr/cstr_problem.hpp"
#include "igbd/util/format.hpp"
#include "igbd/util/stats.hpp"

namespace igbd::bench {

std::string to_string(Method m) {
  switch (m) {
    case Method::kRl: return "rl";
    case Method::kRand: return "rand";
    case Method::kExp: return "exp";
    case Method::kClassic: return "classic";
  }
  return "?";
}

Method method_from_string(const std::string& s) {
  if (s == "rl") return Method::kRl;
  if (s == "rand") return Method::kRand;
  if (s == "exp") return Method::kExp;
  if (s == "classic") return Method::kClassic;
  throw std::invalid_argument("unknown method '" + s + "' (expected rl, rand, exp or classic)");
}

std::vector<Method> methods_from_list(const std::string& list) {
  std::vector<Method> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(method_from_string(item));
  }
  if (out.empty()) throw std::invalid_argument("no methods given");
  return out;
}

std::string Family::name() const {
  return case_np > 0 ? "np" + std::to_string(case_np) : "convex" + std::to_string(convex_dim);
}

void Family::validate() const {
  if ((case_np > 0) == (convex_dim > 0)) throw std::invalid_argument("choose exactly one of a case or a convex family");
}

std::unique_ptr<gbd::DecomposedProblem> Family::make(std::uint64_t seed) const {
  validate();
  if (convex_dim > 0) return std::make_unique<cstr::ConvexFamilyProblem>(cstr::build_convex_family(convex_dim, seed));
  auto table = cstr::load_product_table(case_np, data_dir.empty() ? cstr::default_data_dir() : data_dir);
  if (n_fe > 0) table.n_fe = n_fe;
  return std::make_unique<cstr::CstrProblem>(cstr::sample_instance(table, seed));
}

rl::ProblemSampler Family::sampler() const {
  validate();
  if (convex_dim > 0) {
    const int dim = convex_dim;
    return [dim](std::uint64_t s) -> std::unique_ptr<gbd::DecomposedProblem> {
      return std::make_unique<cstr::ConvexFamilyProblem>(cstr::build_convex_family(dim, s));
    };
  }
  auto table = cstr::load_product_table(case_np, data_dir.empty() ? cstr::default_data_dir() : data_dir);
  if (n_fe > 0) table.n_fe = n_fe;
  return [table](std::uint64_t s) -> std::unique_ptr<gbd::DecomposedProblem> {
    return std::make_unique<cstr::CstrProblem>(cstr::sample_instance(table, s));
  };
}

Family case_family(int n_products, const std::string& data_dir) {
  Family f;
  f.case_np = n_products;
  f.data_dir = data_dir;
  return f;
}

Family convex_family(int dim) {
  Family f;
  f.convex_dim = dim;
  return f;
}

std::uint64_t instance_seed(std::uint64_t base, int index) {
  return derive_seed(base, static_cast<std::uint64_t>(index));
}

std::unique_ptr<gbd::DecomposedProblem> problem_from_json(const nlohmann::json& j, const std::string& data_dir) {
  const auto schema = j.value("schema", "");
  if (schema == "igbd.convex.v1") {
    return std::make_unique<cstr::ConvexFamilyProblem>(
        cstr::build_convex_family(j.at("dim").get<int>(), j.at("seed").get<std::uint64_t>()));
  }
  if (schema == "igbd.instance.v1") {
    return std::make_unique<cstr::CstrProblem>(
        cstr::instance_from_json(j, data_dir.empty() ? cstr::default_data_dir() : data_dir));
  }
  throw std::invalid_argument("unknown instance schema '" + schema + "'");
}

std::unique_ptr<gbd::TolerancePolicy> make_tolerance_policy(Method m, const RunConfig& config,
                                                            const rl::PolicyParams* learned) {
  switch (m) {
    case Method::kRl:
      if (learned == nullptr) throw std::invalid_argument("method rl needs a policy");
      return std::make_unique<rl::LearnedPolicy>(*learned);
    case Method::kRand: return std::make_unique<gbd::UniformRandomPolicy>();
    case Method::kExp: return std::make_unique<gbd::ExpDecayPolicy>(config.alpha_exp);
    case Method::kClassic: return std::make_unique<gbd::ClassicPolicy>();
  }
  throw std::invalid_argument("unknown method");
}

BenchRow run_one(Method m, const RunConfig& config, int index, const rl::PolicyParams* learned,
                 gbd::SolveTrace* trace) {
  BenchRow row;
  row.method = to_string(m);
  row.index = index;
  row.seed = instance_seed(config.seed, index);
  try {
    auto problem = config.family.make(row.seed);
    row.instance_id = problem->instance_id();
    auto policy = make_tolerance_policy(m, config, learned);
    const auto tr = gbd::run_igbd(*problem, *policy, config.igbd, row.seed);
    row.converged = tr.converged;
    row.truncated = tr.truncated;
    row.failed = tr.infeasible;
    row.iterations = tr.iterations();
    row.objective = tr.final_objective;
    row.final_gap = tr.records.empty() ? 1.0 : tr.records.back().gap;
    row.t_mp = tr.t_mp;
    row.t_total = tr.t_total;
    row.pivots = tr.total_pivots();
    row.nodes = tr.total_nodes();
    row.diagnostic = tr.diagnostic;
    if (trace != nullptr) *trace = tr;
  } catch (const std::exception& e) {
    row.failed = true;
    row.diagnostic = e.what();
  }
  return row;
}

MethodSummary summarize(const std::string& method, const std::vector<BenchRow>& rows) {
  MethodSummary s;
  s.method = method;
  std::vector<double> it, tt, tm, pv, nd;
  for (const auto& r : rows) {
    if (r.method != method) continue;
    ++s.n;
    if (r.failed) {
      ++s.failed;
      continue;
    }
    if (r.converged) ++s.converged;
    it.push_back(r.iterations);
    tt.push_back(r.t_total);
    tm.push_back(r.t_mp);
    pv.push_back(static_cast<double>(r.pivots));
    nd.push_back(static_cast<double>(r.nodes));
  }
  if (it.empty()) return s;
  s.median_iterations = median(it);
  s.mean_t_total = mean(tt);
  s.std_t_total = stddev(tt);
  s.mean_t_mp = mean(tm);
  s.std_t_mp = stddev(tm);
  s.mean_pivots = mean(pv);
  s.std_pivots = stddev(pv);
  s.median_pivots = median(pv);
  s.mean_nodes = mean(nd);
  s.std_nodes = stddev(nd);
  return s;
}

BenchReport run_bench(const RunConfig& config, const rl::PolicyParams* learned,
                      const std::function<void(const BenchRow&)>& progress) {
  config.family.validate();
  if (config.n_instances < 1) throw std::invalid_argument("n_instances must be positive");
  BenchReport rep;
  rep.family = config.family.name();
  rep.seed = config.seed;
  rep.n_instances = config.n_instances;
  for (int i = 0; i < config.n_instances; ++i) {
    for (Method m : config.methods) {
      rep.rows.push_back(run_one(m, config, i, learned));
      if (progress) progress(rep.rows.back());
    }
  }
  for (Method m : config.methods) rep.summaries.push_back(summarize(to_string(m), rep.rows));
  return rep;
}

namespace {

std::string clean(std::string s) {
  for (char& c : s) {
    if (c == ',' || c == '\n' || c == '\r') c = ';';
  }
  return s;
}

constexpr const char* kRowHeader =
    "method,index,seed,instance_id,converged,truncated,failed,iterations,objective,final_gap,t_mp,t_total,pivots,"
    "nodes,diagnostic";

}  // namespace

std::string rows_csv(const std::vector<BenchRow>& rows) {
  std::string out = std::string(kRowHeader) + "\n";
  for (const auto& r : rows) {
    out += join_csv({r.method, std::to_string(r.index), std::to_string(r.seed), clean(r.instance_id),
                     r.converged ? "1" : "0", r.truncated ? "1" : "0", r.failed ? "1" : "0",
                     std::to_string(r.iterations), format_double(r.objective), format_double(r.final_gap),
                     format_double(r.t_mp), format_double(r.t_total), std::to_string(r.pivots),
                     std::to_string(r.nodes), clean(r.diagnostic)});
    out += "\n";
  }
  return out;
}

std::vector<BenchRow> rows_from_csv(const std::string& text) {
  const auto table = parse_csv(text);
  std::vector<BenchRow> rows;
  for (std::size_t i = 1; i < table.size(); ++i) {
    auto f = table[i];
    if (f.size() == 14) f.push_back("");
    if (f.size() != 15) throw std::invalid_argument("bench row needs 15 fields");
    BenchRow r;
    r.method = f[0];
    r.index = std::stoi(f[1]);
    r.seed = std::stoull(f[2]);
    r.instance_id = f[3];
    r.converged = f[4] == "1";
    r.truncated = f[5] == "1";
    r.failed = f[6] == "1";
    r.iterations = std::stoi(f[7]);
    r.objective = std::stod(f[8]);
    r.final_gap = std::stod(f[9]);
    r.t_mp = std::stod(f[10]);
    r.t_total = std::stod(f[11]);
    r.pivots = std::stol(f[12]);
    r.nodes = std::stol(f[13]);
    r.diagnostic = f[14];
    rows.push_back(std::move(r));
  }
  return rows;
}

std::string long_csv(const std::vector<BenchRow>& rows) {
  std::string out = "method,instance,t_total,t_MP,nodes,pivots\n";
  for (const auto& r : rows) {
    if (r.failed) continue;
    out += join_csv({r.method, std::to_string(r.index), format_double(r.t_total), format_double(r.t_mp),
                     std::to_string(r.nodes), std::to_string(r.pivots)});
    out += "\n";
  }
  return out;
}

nlohmann::json to_json(const BenchReport& r) {
  nlohmann::json sums = nlohmann::json::array();
  for (const auto& s : r.summaries) {
    sums.push_back({{"method", s.method},
                    {"n", s.n},
                    {"converged", s.converged},
                    {"failed", s.failed},
                    {"median_iterations", s.median_iterations},
                    {"mean_t_total", s.mean_t_total},
                    {"std_t_total", s.std_t_total},
                    {"mean_t_mp", s.mean_t_mp},
                    {"std_t_mp", s.std_t_mp},
                    {"mean_pivots", s.mean_pivots},
                    {"std_pivots", s.std_pivots},
                    {"median_pivots", s.median_pivots},
                    {"mean_nodes", s.mean_nodes},
                    {"std_nodes", s.std_nodes}});
  }
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& x : r.rows) {
    rows.push_back({{"method", x.method},
                    {"index", x.index},
                    {"seed", x.seed},
                    {"instance_id", x.instance_id},
                    {"converged", x.converged},
                    {"truncated", x.truncated},
                    {"failed", x.failed},
                    {"iterations", x.iterations},
                    {"objective", json_number(x.objective)},
                    {"final_gap", json_number(x.final_gap)},
                    {"t_mp", x.t_mp},
                    {"t_total", x.t_total},
                    {"pivots", x.pivots},
                    {"nodes", x.nodes},
                    {"diagnostic", x.diagnostic}});
  }
  return {{"schema", "igbd.bench.v1"},
          {"family", r.family},
          {"seed", r.seed},
          {"n_instances", r.n_instances},
          {"summaries", sums},
          {"rows", rows}};
}

BenchReport bench_report_from_json(const nlohmann::json& j) {
  if (j.value("schema", "") != "igbd.bench.v1") throw std::invalid_argument("not an igbd.bench.v1 document");
  BenchReport r;
  r.family = j.at("family").get<std::string>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.n_instances = j.at("n_instances").get<int>();
  for (const auto& x : j.at("rows")) {
    BenchRow b;
    b.method = x.at("method").get<std::string>();
    b.index = x.at("index").get<int>();
    b.seed = x.at("seed").get<std::uint64_t>();
    b.instance_id = x.at("instance_id").get<std::string>();
    b.converged = x.at("converged").get<bool>();
    b.truncated = x.at("truncated").get<bool>();
    b.failed = x.at("failed").get<bool>();
    b.iterations = x.at("iterations").get<int>();
    b.objective = json_to_double(x.at("objective"));
    b.final_gap = json_to_double(x.at("final_gap"));
    b.t_mp = x.at("t_mp").get<double>();
    b.t_total = x.at("t_total").get<double>();
    b.pivots = x.at("pivots").get<long>();
    b.nodes = x.at("nodes").get<long>();
    b.diagnostic = x.at("diagnostic").get<std::string>();
    r.rows.push_back(std::move(b));
  }
  for (const auto& x : j.at("summaries")) {
    MethodSummary s;
    s.method = x.at("method").get<std::string>();
    s.n = x.at("n").get<int>();
    s.converged = x.at("converged").get<int>();
    s.failed = x.at("failed").get<int>();
    s.median_iterations = x.at("median_iterations").get<double>();
    s.mean_t_total = x.at("mean_t_total").get<double>();
    s.std_t_total = x.at("std_t_total").get<double>();
    s.mean_t_mp = x.at("mean_t_mp").get<double>();
    s.std_t_mp = x.at("std_t_mp").get<double>();
    s.mean_pivots = x.at("mean_pivots").get<double>();
    s.std_pivots = x.at("std_pivots").get<double>();
    s.median_pivots = x.at("median_pivots").get<double>();
    s.mean_nodes = x.at("mean_nodes").get<double>();
    s.std_nodes = x.at("std_nodes").get<double>();
    r.summaries.push_back(s);
  }
  return r;
}

}  // namespace igbd::bench
