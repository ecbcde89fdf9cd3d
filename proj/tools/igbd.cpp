// igbd: solve, train, bench, oracle, mintime and sample verbs.
// Exit codes: 0 success, 1 solver failure, 2 usage or input error.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>
#include <stdexcept>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "igbd/bench/bench.hpp"
#include "igbd/cstr/convex_family.hpp"
#include "igbd/cstr/cstr_problem.hpp"
#include "igbd/cstr/instance.hpp"
#include "igbd/cstr/oracle.hpp"
#include "igbd/gbd/igbd.hpp"
#include "igbd/rl/ppo.hpp"
#include "igbd/util/format.hpp"

namespace fs = std::filesystem;
using namespace igbd;

namespace {

struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SolverFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string require_file(const std::string& path, const std::string& what) {
  if (!fs::is_regular_file(path)) throw InputError(what + " not found: " + path);
  return read_file(path);
}

nlohmann::json read_json(const std::string& path, const std::string& what) {
  const auto text = require_file(path, what);
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw InputError("malformed " + what + " " + path + ": " + e.what());
  }
}

rl::PolicyParams read_policy(const std::string& path) {
  if (path.empty()) throw InputError("method rl needs --policy");
  const auto j = read_json(path, "policy file");
  try {
    return rl::policy_from_json(j);
  } catch (const std::exception& e) {
    throw InputError("malformed policy file " + path + ": " + e.what());
  }
}

void ensure_parent(const std::string& path) {
  const auto parent = fs::path(path).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
}

void write_out(const std::string& path, const std::string& text) {
  ensure_parent(path);
  write_file(path, text);
}

// Where an instance comes from: a file, a case-study seed, or a convex seed.
struct Source {
  std::string instance_path;
  int case_np = 0;
  int convex_dim = 0;
  std::uint64_t seed = 1;
  std::string data_dir;
  int n_fe = 0;

  void add(CLI::App* app) {
    app->add_option("--instance", instance_path, "Instance JSON (igbd.instance.v1 or igbd.convex.v1)");
    app->add_option("--case", case_np, "Case study with this many products (3, 5, 6, 7)");
    app->add_option("--convex", convex_dim, "Convex family with this many binaries");
    app->add_option("--seed", seed, "Instance seed")->capture_default_str();
    app->add_option("--data-dir", data_dir, "Product table directory (default: bundled tables)");
    app->add_option("--n-fe", n_fe, "Finite elements per transition (default: table value)");
  }

  bench::Family family() const {
    bench::Family f;
    f.case_np = case_np;
    f.convex_dim = convex_dim;
    f.data_dir = data_dir;
    f.n_fe = n_fe;
    return f;
  }

  void check_family() const {
    if ((case_np > 0) == (convex_dim > 0)) throw InputError("give exactly one of --case or --convex");
  }

  std::unique_ptr<gbd::DecomposedProblem> make() const {
    const int given = (instance_path.empty() ? 0 : 1) + (case_np > 0 ? 1 : 0) + (convex_dim > 0 ? 1 : 0);
    if (given != 1) throw InputError("give exactly one of --instance, --case or --convex");
    if (!instance_path.empty()) {
      const auto j = read_json(instance_path, "instance file");
      try {
        return bench::problem_from_json(j, data_dir);
      } catch (const std::exception& e) {
        throw InputError("malformed instance file " + instance_path + ": " + e.what());
      }
    }
    try {
      return family().make(seed);
    } catch (const std::invalid_argument& e) {
      throw InputError(e.what());
    }
  }

  cstr::InstanceParams case_instance() const {
    if (!instance_path.empty()) {
      const auto j = read_json(instance_path, "instance file");
      try {
        return cstr::instance_from_json(j, data_dir.empty() ? cstr::default_data_dir() : data_dir);
      } catch (const std::exception& e) {
        throw InputError("malformed instance file " + instance_path + ": " + e.what());
      }
    }
    if (case_np <= 0) throw InputError("give --instance or --case");
    return cstr::sample_instance(load_table(), seed);
  }

  cstr::ProductTable load_table() const {
    const auto dir = data_dir.empty() ? cstr::default_data_dir() : data_dir;
    cstr::ProductTable t;
    try {
      t = cstr::load_product_table(case_np, dir);
    } catch (const std::exception& e) {
      throw InputError(e.what());
    }
    if (n_fe > 0) t.n_fe = n_fe;
    return t;
  }
};

void add_igbd_options(CLI::App* app, gbd::IgbdOptions& o) {
  app->add_option("--eps-tol", o.eps_tol, "Termination gap")->capture_default_str();
  app->add_option("--t-max", o.t_max, "Iteration limit")->capture_default_str();
}

int cmd_solve(const Source& src, const std::string& method_name, const std::string& policy_path,
              const gbd::IgbdOptions& opts, double alpha_exp, const std::string& out) {
  bench::Method method;
  try {
    method = bench::method_from_string(method_name);
  } catch (const std::invalid_argument& e) {
    throw InputError(e.what());
  }
  std::unique_ptr<rl::PolicyParams> learned;
  if (method == bench::Method::kRl) learned = std::make_unique<rl::PolicyParams>(read_policy(policy_path));
  auto problem = src.make();
  bench::RunConfig cfg;
  cfg.igbd = opts;
  cfg.alpha_exp = alpha_exp;
  auto policy = bench::make_tolerance_policy(method, cfg, learned.get());
  const auto trace = gbd::run_igbd(*problem, *policy, opts, src.seed);
  if (!out.empty()) {
    write_out(out + ".csv", gbd::trace_csv(trace));
    write_out(out + ".json", gbd::to_json(trace).dump(1) + "\n");
  }
  const double eps = trace.records.empty() ? 1.0 : trace.records.back().gap;
  std::printf("instance=%s method=%s converged=%s iterations=%d objective=%s eps=%s t_mp=%s t_total=%s pivots=%ld\n",
              trace.instance_id.c_str(), method_name.c_str(), trace.converged ? "true" : "false",
              trace.iterations(), format_double(trace.final_objective).c_str(), format_double(eps).c_str(),
              format_double(trace.t_mp).c_str(), format_double(trace.t_total).c_str(), trace.total_pivots());
  if (!trace.converged) {
    std::fprintf(stderr, "not converged: %s\n", trace.diagnostic.c_str());
    return 1;
  }
  return 0;
}

int cmd_train(const Source& src, rl::PpoConfig cfg, const std::string& config_path, int calib_n,
              const std::string& policy_out, const std::string& log_out, bool quiet) {
  src.check_family();
  if (!config_path.empty()) {
    const auto j = read_json(config_path, "config file");
    try {
      cfg = rl::ppo_config_from_json(j);
    } catch (const std::exception& e) {
      throw InputError("malformed config file " + config_path + ": " + e.what());
    }
  }
  const auto family = src.family();
  rl::ProblemSampler sampler;
  try {
    sampler = family.sampler();
  } catch (const std::invalid_argument& e) {
    throw InputError(e.what());
  }
  if (cfg.env.t_ref <= 0.0) {
    if (cfg.env.time_source != rl::TimeSource::kProxy) throw InputError("--t-ref is required with --time-source cpu");
    cfg.env.t_ref = rl::calibrate_t_ref_proxy(sampler, calib_n, derive_seed(src.seed, 77), cfg.env.igbd);
    if (!quiet) std::fprintf(stderr, "t_ref=%s\n", format_double(cfg.env.t_ref).c_str());
  }
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw InputError(e.what());
  }
  auto result = rl::ppo_train(cfg, sampler, family.case_tag(), src.seed, [&](const rl::TrainLogRow& r) {
    if (!quiet) {
      std::fprintf(stderr, "update %d steps %ld mean_return %s entropy %s\n", r.update, r.steps,
                   format_double(r.mean_return).c_str(), format_double(r.entropy).c_str());
    }
  });
  ensure_parent(policy_out);
  rl::save_policy(result.policy, policy_out);
  if (!log_out.empty()) write_out(log_out, rl::train_log_csv(result.log));
  std::printf("policy=%s updates=%zu steps=%ld episodes=%d\n", policy_out.c_str(), result.log.size(), result.steps,
              result.episodes);
  return 0;
}

int cmd_bench(const Source& src, const std::string& methods, int n_instances, const std::string& policy_path,
              const gbd::IgbdOptions& opts, double alpha_exp, const std::string& out_dir, bool quiet) {
  src.check_family();
  bench::RunConfig cfg;
  cfg.family = src.family();
  try {
    cfg.methods = bench::methods_from_list(methods);
  } catch (const std::invalid_argument& e) {
    throw InputError(e.what());
  }
  if (n_instances < 1) throw InputError("--n-instances must be positive");
  cfg.n_instances = n_instances;
  cfg.seed = src.seed;
  cfg.igbd = opts;
  cfg.alpha_exp = alpha_exp;
  cfg.policy_path = policy_path;
  std::unique_ptr<rl::PolicyParams> learned;
  for (auto m : cfg.methods) {
    if (m == bench::Method::kRl) learned = std::make_unique<rl::PolicyParams>(read_policy(policy_path));
  }
  const auto report = bench::run_bench(cfg, learned.get(), [&](const bench::BenchRow& r) {
    if (!quiet) {
      std::fprintf(stderr, "%s %d iterations=%d converged=%d pivots=%ld%s%s\n", r.method.c_str(), r.index,
                   r.iterations, r.converged ? 1 : 0, r.pivots, r.failed ? " failed: " : "",
                   r.failed ? r.diagnostic.c_str() : "");
    }
  });
  fs::create_directories(out_dir);
  const auto base = (fs::path(out_dir) / report.family).string();
  write_file(base + "_rows.csv", bench::rows_csv(report.rows));
  write_file(base + "_report.json", bench::to_json(report).dump(1) + "\n");
  write_file(base + "_long.csv", bench::long_csv(report.rows));
  for (const auto& s : report.summaries) {
    std::printf("%-8s n=%d converged=%d failed=%d median_iterations=%g mean_t_total=%.4g mean_t_mp=%.4g "
                "mean_pivots=%.6g median_pivots=%.6g\n",
                s.method.c_str(), s.n, s.converged, s.failed, s.median_iterations, s.mean_t_total, s.mean_t_mp,
                s.mean_pivots, s.median_pivots);
  }
  return 0;
}

int cmd_oracle(const Source& src, int grid_points, const std::string& cache_dir, const std::string& out) {
  const auto params = src.case_instance();
  cstr::OracleOptions opts;
  opts.grid_points = grid_points;
  const auto key = cstr::instance_hash(params) + "_g" + std::to_string(grid_points);
  const auto cache = cache_dir.empty() ? fs::path() : fs::path(cache_dir) / ("oracle_" + key + ".json");
  cstr::OracleResult r;
  bool hit = false;
  if (!cache.empty() && fs::is_regular_file(cache)) {
    r = cstr::oracle_result_from_json(nlohmann::json::parse(read_file(cache.string())));
    hit = true;
  } else {
    r = cstr::monolithic_oracle(params, opts);
    if (!cache.empty()) write_out(cache.string(), cstr::to_json(r).dump(1) + "\n");
  }
  if (!out.empty()) write_out(out, cstr::to_json(r).dump(1) + "\n");
  std::string seq;
  for (int i : r.sequence) seq += (seq.empty() ? "" : "-") + std::to_string(i);
  std::printf("instance=%s objective=%s sequence=%s cached=%s\n", params.id().c_str(),
              format_double(r.objective).c_str(), seq.c_str(), hit ? "true" : "false");
  return 0;
}

int cmd_mintime(const Source& src, double rel_width, const std::string& table_out, const std::string& csv_out) {
  if (src.case_np <= 0) throw InputError("give --case");
  auto table = src.load_table();
  nlp::MinTimeOptions opts;
  opts.rel_width = rel_width;
  cstr::compute_min_times(table, opts);
  std::string csv = "from,to,theta_min\n";
  for (int j = 0; j < table.size(); ++j) {
    csv += join_csv({"c0", table.products[j].name, format_double(table.theta_hat_min[j])}) + "\n";
  }
  for (int i = 0; i < table.size(); ++i) {
    for (int j = 0; j < table.size(); ++j) {
      if (i == j) continue;
      csv += join_csv({table.products[i].name, table.products[j].name, format_double(table.theta_min[i][j])}) + "\n";
    }
  }
  if (!csv_out.empty()) write_out(csv_out, csv);
  if (!table_out.empty()) write_out(table_out, cstr::to_json(table).dump(1) + "\n");
  std::fputs(csv.c_str(), stdout);
  return 0;
}

int cmd_sample(const Source& src, const std::string& out) {
  nlohmann::json j;
  if (src.convex_dim > 0 && src.case_np <= 0) {
    j = {{"schema", "igbd.convex.v1"}, {"dim", src.convex_dim}, {"seed", src.seed}};
  } else {
    j = cstr::to_json(src.case_instance());
  }
  const auto text = j.dump(1) + "\n";
  if (out.empty()) {
    std::fputs(text.c_str(), stdout);
  } else {
    write_out(out, text);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Benders decomposition with learned master tolerances"};
  app.require_subcommand(1);

  Source src;
  gbd::IgbdOptions opts;
  double alpha_exp = 0.8;
  std::string method = "classic", policy_path, out;
  bool quiet = false;

  auto* solve = app.add_subcommand("solve", "Solve one instance and write its trace");
  src.add(solve);
  add_igbd_options(solve, opts);
  solve->add_option("--method", method, "rl, rand, exp or classic")->capture_default_str();
  solve->add_option("--policy", policy_path, "Policy JSON for --method rl");
  solve->add_option("--alpha-exp", alpha_exp, "Decay factor of exp")->capture_default_str();
  solve->add_option("--out", out, "Trace prefix; writes <out>.csv and <out>.json");

  rl::PpoConfig ppo;
  ppo.env.t_ref = 0.0;
  std::string config_path, time_source = "proxy", policy_out = "policy.json", log_out = "train_log.csv";
  int calib_n = 20;
  auto* train = app.add_subcommand("train", "Train a tolerance policy with PPO");
  src.add(train);
  add_igbd_options(train, ppo.env.igbd);
  train->add_option("--steps", ppo.total_steps, "Total environment steps")->capture_default_str();
  train->add_option("--learning-rate", ppo.learning_rate, "Adam step size")->capture_default_str();
  train->add_option("--clip", ppo.clip, "PPO clip range")->capture_default_str();
  train->add_option("--gamma", ppo.gamma, "Discount")->capture_default_str();
  train->add_option("--gae-lambda", ppo.gae_lambda, "GAE lambda")->capture_default_str();
  train->add_option("--rollout-steps", ppo.rollout_steps, "Steps per update")->capture_default_str();
  train->add_option("--batch-size", ppo.batch_size, "Minibatch size")->capture_default_str();
  train->add_option("--epochs", ppo.epochs_per_update, "Epochs per update")->capture_default_str();
  train->add_option("--entropy-coef", ppo.entropy_coef, "Entropy bonus")->capture_default_str();
  train->add_option("--alpha", ppo.env.alpha, "Weight of the tolerance term in the reward")->capture_default_str();
  train->add_option("--time-source", time_source, "proxy (master pivots) or cpu")->capture_default_str();
  train->add_option("--t-ref", ppo.env.t_ref, "Reward time scale (0: calibrate on sampled instances)")
      ->capture_default_str();
  train->add_option("--calibration-instances", calib_n, "Instances for t_ref calibration")->capture_default_str();
  train->add_option("--config", config_path, "PpoConfig JSON (replaces the flags above)");
  train->add_option("--policy-out", policy_out, "Policy output")->capture_default_str();
  train->add_option("--log-out", log_out, "Training log CSV")->capture_default_str();
  train->add_flag("--quiet", quiet, "No progress output");

  std::string methods = "rl,rand,exp,classic", out_dir = "bench_out";
  int n_instances = 50;
  auto* bench_cmd = app.add_subcommand("bench", "Run every method on a seeded instance set");
  src.add(bench_cmd);
  add_igbd_options(bench_cmd, opts);
  bench_cmd->add_option("--methods", methods, "Comma-separated methods")->capture_default_str();
  bench_cmd->add_option("--n-instances", n_instances, "Instances")->capture_default_str();
  bench_cmd->add_option("--policy", policy_path, "Policy JSON for rl");
  bench_cmd->add_option("--alpha-exp", alpha_exp, "Decay factor of exp")->capture_default_str();
  bench_cmd->add_option("--out-dir", out_dir, "Output directory")->capture_default_str();
  bench_cmd->add_flag("--quiet", quiet, "No progress output");

  int grid_points = 41;
  std::string cache_dir = ".igbd_cache";
  auto* oracle = app.add_subcommand("oracle", "Monolithic enumeration oracle of a case-study instance");
  src.add(oracle);
  oracle->add_option("--grid-points", grid_points, "Transition-time grid points")->capture_default_str();
  oracle->add_option("--cache-dir", cache_dir, "Result cache keyed by instance hash (empty: off)")
      ->capture_default_str();
  oracle->add_option("--out", out, "Result JSON");

  double rel_width = 1e-2;
  std::string table_out, csv_out;
  auto* mintime = app.add_subcommand("mintime", "Tabulate minimum transition times of a product table");
  src.add(mintime);
  mintime->add_option("--rel-width", rel_width, "Relative bisection bracket")->capture_default_str();
  mintime->add_option("--table-out", table_out, "Write the table with recomputed times");
  mintime->add_option("--csv-out", csv_out, "Write the times as CSV");

  auto* sample = app.add_subcommand("sample", "Write a sampled instance file");
  src.add(sample);
  sample->add_option("--out", out, "Instance JSON (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*solve) return cmd_solve(src, method, policy_path, opts, alpha_exp, out);
    if (*train) {
      try {
        ppo.env.time_source = rl::time_source_from_string(time_source);
      } catch (const std::invalid_argument& e) {
        throw InputError(e.what());
      }
      return cmd_train(src, ppo, config_path, calib_n, policy_out, log_out, quiet);
    }
    if (*bench_cmd) return cmd_bench(src, methods, n_instances, policy_path, opts, alpha_exp, out_dir, quiet);
    if (*oracle) return cmd_oracle(src, grid_points, cache_dir, out);
    if (*mintime) return cmd_mintime(src, rel_width, table_out, csv_out);
    if (*sample) return cmd_sample(src, out);
  } catch (const InputError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "solver failure: %s\n", e.what());
    return 1;
  }
  return 2;
}
