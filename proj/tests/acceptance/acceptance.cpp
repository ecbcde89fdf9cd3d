// Acceptance run: one PASS/FAIL line per criterion. The whole evaluation
// runs twice with the same seeds; criterion 9 compares the deterministic
// fingerprints of the two passes.
//
// Exit status is 0 when every failing criterion is listed in
// --known-failures, 1 otherwise.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "igbd/bench/bench.hpp"
#include "igbd/cstr/convex_family.hpp"
#include "igbd/cstr/cstr_problem.hpp"
#include "igbd/cstr/instance.hpp"
#include "igbd/cstr/oracle.hpp"
#include "igbd/gbd/igbd.hpp"
#include "igbd/gbd/policy.hpp"
#include "igbd/gbd/trace.hpp"
#include "igbd/nlp/transition.hpp"
#include "igbd/rl/ppo.hpp"
#include "igbd/util/format.hpp"
#include "igbd/util/random.hpp"
#include "igbd/util/stats.hpp"

using namespace igbd;

namespace {

constexpr int kCriteria = 9;

struct Outcome {
  bool pass = false;
  std::string detail;
  std::string fingerprint;
};

struct PassResult {
  Outcome c[kCriteria];
};

double wall_seconds(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

struct RunWithCuts {
  gbd::SolveTrace trace;
  std::vector<gbd::BendersCut> cuts;
};

RunWithCuts run_with_cuts(gbd::DecomposedProblem& problem, gbd::TolerancePolicy& policy,
                          const gbd::IgbdOptions& options, std::uint64_t seed) {
  Rng rng(seed);
  gbd::IgbdSession session(problem, options);
  while (!session.done()) session.step(policy.choose(session, rng));
  RunWithCuts r{session.trace(), session.cuts()};
  r.trace.policy = policy.name();
  return r;
}

// Convex-family instances of criteria 1 to 4: dimensions 6 to 10.
struct ConvexCase {
  int dim;
  std::uint64_t seed;
};

std::vector<ConvexCase> convex_cases(std::uint64_t base) {
  std::vector<ConvexCase> out;
  for (int i = 0; i < 25; ++i) out.push_back({6 + i % 5, bench::instance_seed(base, i)});
  return out;
}

struct CutPool {
  std::vector<std::pair<int, gbd::BendersCut>> cuts;  // case index, cut
};

// Criterion 1 and the trace part of criterion 2.
struct ConvexState {
  std::vector<ConvexCase> cases;
  std::vector<double> oracle;
  std::vector<gbd::SolveTrace> bound_traces;  // (case, trace) pairs flattened
  std::vector<int> bound_case;
  CutPool pool;
  std::string fp;
};

Outcome criterion1(std::uint64_t seed, ConvexState& st) {
  const auto t0 = std::chrono::steady_clock::now();
  st.cases = convex_cases(derive_seed(seed, 1));
  int ok = 0;
  double worst = 0.0;
  std::ostringstream fp;
  for (std::size_t i = 0; i < st.cases.size(); ++i) {
    auto prob = cstr::build_convex_family(st.cases[i].dim, st.cases[i].seed);
    const auto oracle = cstr::convex_oracle(prob.instance());
    st.oracle.push_back(oracle.objective);
    gbd::ClassicPolicy exact(0.0);
    auto run = run_with_cuts(prob, exact, {1e-7, 200, {}}, st.cases[i].seed);
    const double rel = std::abs(run.trace.final_objective - oracle.objective) / std::max(1.0, std::abs(oracle.objective));
    worst = std::max(worst, rel);
    if (run.trace.converged && rel <= 1e-6) ++ok;
    fp << gbd::deterministic_fingerprint(run.trace) << format_double(oracle.objective) << "\n";
    st.bound_traces.push_back(run.trace);
    st.bound_case.push_back(static_cast<int>(i));
    for (auto& c : run.cuts) st.pool.cuts.push_back({static_cast<int>(i), c});
  }
  const double secs = wall_seconds(t0);
  Outcome o;
  o.pass = ok == 25 && secs < 60.0;
  o.detail = std::to_string(ok) + "/25 within 1e-6 (worst rel " + fmt("%.2e", worst) + "), " + fmt("%.1f", secs) + " s";
  o.fingerprint = fp.str();
  return o;
}

Outcome criterion2(ConvexState& st) {
  std::ostringstream fp;
  for (int i = 0; i < 10; ++i) {
    const auto& c = st.cases[i];
    auto prob = cstr::build_convex_family(c.dim, c.seed);
    gbd::UniformRandomPolicy rand;
    auto run = run_with_cuts(prob, rand, {}, derive_seed(c.seed, 2));
    fp << gbd::deterministic_fingerprint(run.trace) << "\n";
    st.bound_traces.push_back(run.trace);
    st.bound_case.push_back(i);
    for (auto& cut : run.cuts) st.pool.cuts.push_back({i, cut});
  }
  int iterations = 0, above = 0, decreasing = 0;
  for (std::size_t k = 0; k < st.bound_traces.size(); ++k) {
    const double v = st.oracle[st.bound_case[k]];
    const auto& recs = st.bound_traces[k].records;
    for (std::size_t l = 0; l < recs.size(); ++l) {
      ++iterations;
      if (recs[l].tlb > v + 1e-9 * std::max(1.0, std::abs(v))) ++above;
      if (l > 0 && recs[l].tlb < recs[l - 1].tlb) ++decreasing;
    }
  }
  Outcome o;
  o.pass = above == 0 && decreasing == 0;
  o.detail = std::to_string(st.bound_traces.size()) + " runs, " + std::to_string(iterations) + " iterations, " +
             std::to_string(above) + " TLB above optimum, " + std::to_string(decreasing) + " TLB decreases";
  o.fingerprint = fp.str();
  return o;
}

Outcome criterion3(ConvexState& st) {
  struct Arm {
    std::string name;
    std::function<std::unique_ptr<gbd::TolerancePolicy>()> make;
    int ok = 0;
  };
  std::vector<Arm> arms;
  arms.push_back({"exp(0.8)", [] { return std::make_unique<gbd::ExpDecayPolicy>(0.8); }});
  for (double a : {-1.0, 0.0, 1.0}) {
    arms.push_back({"a=" + fmt("%+.0f", a), [a] { return std::make_unique<gbd::FixedActionPolicy>(a); }});
  }
  std::ostringstream fp;
  for (std::size_t i = 0; i < st.cases.size(); ++i) {
    for (auto& arm : arms) {
      auto prob = cstr::build_convex_family(st.cases[i].dim, st.cases[i].seed);
      auto policy = arm.make();
      auto run = run_with_cuts(prob, *policy, {}, st.cases[i].seed);
      const bool good = run.trace.converged && !run.trace.records.empty() && run.trace.records.back().gap < 1e-3;
      if (good) ++arm.ok;
      fp << gbd::deterministic_fingerprint(run.trace) << "\n";
      for (auto& cut : run.cuts) st.pool.cuts.push_back({static_cast<int>(i), cut});
    }
  }
  Outcome o;
  o.pass = true;
  for (const auto& arm : arms) {
    if (arm.ok != 25) o.pass = false;
    o.detail += (o.detail.empty() ? "" : ", ") + arm.name + " " + std::to_string(arm.ok) + "/25";
  }
  o.detail += " converged";
  o.fingerprint = fp.str();
  return o;
}

Outcome criterion4(const ConvexState& st) {
  long checks = 0, violations = 0;
  double worst = -1e300;
  for (const auto& [i, cut] : st.pool.cuts) {
    const auto inst = cstr::sample_convex_instance(st.cases[i].dim, st.cases[i].seed);
    const auto& sp = inst.subproblems.at(cut.subproblem_id);
    for (int k = 0; k < 100; ++k) {
      const double t = inst.theta_max * k / 99.0;
      const double excess = gbd::evaluate_cut(cut, {t}) - sp.value(t);
      worst = std::max(worst, excess);
      ++checks;
      if (excess > 1e-8) ++violations;
    }
  }
  Outcome o;
  o.pass = violations == 0 && !st.pool.cuts.empty();
  o.detail = std::to_string(st.pool.cuts.size()) + " cuts, " + std::to_string(checks) + " grid checks, " +
             std::to_string(violations) + " violations (max excess " + fmt("%.2e", worst) + ")";
  o.fingerprint = std::to_string(st.pool.cuts.size()) + format_double(worst);
  return o;
}

Outcome criterion5(std::uint64_t seed, const rl::PolicyParams& learned) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto table = cstr::load_product_table(3);
  const auto base = derive_seed(seed, 5);
  int oracle_ok = 0, agree_ok = 0;
  double worst_oracle = 0.0, worst_agree = 0.0;
  std::ostringstream fp;
  for (int i = 0; i < 5; ++i) {
    const auto s = bench::instance_seed(base, i);
    const auto params = cstr::sample_instance(table, s);
    const auto oracle = cstr::monolithic_oracle(params);
    fp << format_double(oracle.objective);
    for (int k : oracle.sequence) fp << " " << k;
    fp << "\n";
    std::vector<double> objs;
    bool all_converged = true;
    for (auto m : {bench::Method::kClassic, bench::Method::kRl, bench::Method::kRand, bench::Method::kExp}) {
      cstr::CstrProblem prob(params);
      bench::RunConfig cfg;
      auto policy = bench::make_tolerance_policy(m, cfg, &learned);
      const auto tr = gbd::run_igbd(prob, *policy, {}, s);
      all_converged = all_converged && tr.converged;
      objs.push_back(-tr.final_objective);
      fp << gbd::deterministic_fingerprint(tr) << "\n";
    }
    const double rel = std::abs(objs[0] - oracle.objective) / std::abs(oracle.objective);
    worst_oracle = std::max(worst_oracle, rel);
    if (all_converged && rel <= 1e-3) ++oracle_ok;
    const auto [lo, hi] = std::minmax_element(objs.begin(), objs.end());
    const double spread = (*hi - *lo) / std::abs(objs[0]);
    worst_agree = std::max(worst_agree, spread);
    if (all_converged && spread <= 1e-3) ++agree_ok;
  }
  const double secs = wall_seconds(t0);
  Outcome o;
  o.pass = oracle_ok == 5 && agree_ok == 5 && secs < 600.0;
  o.detail = "classic vs oracle " + std::to_string(oracle_ok) + "/5 (worst rel " + fmt("%.2e", worst_oracle) +
             "), four policies agree " + std::to_string(agree_ok) + "/5 (worst spread " + fmt("%.2e", worst_agree) +
             "), " + fmt("%.0f", secs) + " s";
  o.fingerprint = fp.str();
  return o;
}

Outcome criterion6(std::uint64_t seed) {
  const auto table = cstr::load_product_table(7);
  Rng rng(derive_seed(seed, 6));
  int ok = 0, n = 0, draws = 0;
  double worst = 0.0;
  std::ostringstream fp;
  while (n < 20 && draws < 200) {
    ++draws;
    nlp::TransitionSpec s;
    s.reactor = table.reactor;
    s.bounds = table.bounds;
    s.n_fe = table.n_fe;
    s.c_start = rng.uniform(0.2, 0.7);
    s.c_end = rng.uniform(0.2, 0.7);
    s.alpha_u = rng.uniform(0.1, 1.0);
    if (std::abs(s.c_start - s.c_end) < 0.02) continue;
    s.f_start = nlp::steady_flow(s.reactor, s.c_start);
    s.f_end = nlp::steady_flow(s.reactor, s.c_end);
    s.f_target = s.f_end;
    const double theta = nlp::min_transition_time(s) * rng.uniform(1.1, 3.0);
    const auto r = nlp::solve_transition(s, theta);
    ++n;
    const double h = 1e-4 * theta;
    const auto up = nlp::solve_transition(s, theta + h);
    const auto dn = nlp::solve_transition(s, theta - h);
    const double fd = (up.value - dn.value) / (2.0 * h);
    const double err = std::abs(r.slope - fd);
    const double tol = std::max(1e-3, 0.02 * std::abs(r.slope));
    worst = std::max(worst, err / tol);
    const bool conv = r.status == nlp::TransitionStatus::kConverged && up.status == nlp::TransitionStatus::kConverged &&
                      dn.status == nlp::TransitionStatus::kConverged;
    if (conv && err <= tol) ++ok;
    fp << format_double(theta) << " " << format_double(r.value) << " " << format_double(r.slope) << "\n";
  }
  Outcome o;
  o.pass = ok == 20 && n == 20;
  o.detail = std::to_string(ok) + "/" + std::to_string(n) + " slopes within max(1e-3, 2%) of central differences " +
             "(worst err/tol " + fmt("%.3f", worst) + ")";
  o.fingerprint = fp.str();
  return o;
}

Outcome criterion7() {
  rl::PpoConfig cfg;
  cfg.hidden_actor = 8;
  cfg.hidden_critic = 8;
  auto pol = rl::make_policy(5, cfg, 0, 7);
  for (double& w : pol.actor.params()) w *= 20.0;
  Rng rng(8);
  rl::Minibatch b;
  const double ratio[] = {0.5, 0.8, 1.05, 1.1, 1.5, 2.0};
  for (int i = 0; i < 6; ++i) {
    std::vector<double> s(5);
    for (double& x : s) x = rng.uniform(-1.0, 1.0);
    b.states.push_back(s);
    b.actions.push_back(static_cast<int>(rng.index(gbd::kNumActions)));
    const auto p = rl::softmax(pol.actor.forward(s));
    b.old_log_probs.push_back(std::log(p[b.actions.back()]) - std::log(ratio[i]));
    b.advantages.push_back(i % 2 == 0 ? rng.uniform(0.5, 2.0) : -rng.uniform(0.5, 2.0));
    b.returns.push_back(rng.uniform(-3.0, 3.0));
  }
  std::vector<double> ga, gc;
  rl::ppo_loss(pol, b, cfg, &ga, &gc);
  auto rel_error = [&](rl::Mlp rl::PolicyParams::*net, const std::vector<double>& g) {
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) {
      auto p = pol, q = pol;
      const double h = 1e-6;
      (p.*net).params()[k] += h;
      (q.*net).params()[k] -= h;
      const double fd = (rl::ppo_loss(p, b, cfg).total - rl::ppo_loss(q, b, cfg).total) / (2 * h);
      num += (fd - g[k]) * (fd - g[k]);
      den += g[k] * g[k];
    }
    return den > 0.0 ? std::sqrt(num / den) : 1.0;
  };
  const double ea = rel_error(&rl::PolicyParams::actor, ga);
  const double ec = rel_error(&rl::PolicyParams::critic, gc);
  const auto gae = rl::compute_gae({1, 1, 1}, {0, 0, 0}, {0, 0, 0}, {0, 0, 1}, {0, 0, 1}, 0.5, 1.0);
  const bool gae_ok = gae == std::vector<double>{1.75, 1.5, 1.0};
  Outcome o;
  o.pass = ea <= 1e-4 && ec <= 1e-4 && gae_ok;
  o.detail = "gradient rel error actor " + fmt("%.1e", ea) + ", critic " + fmt("%.1e", ec) + "; GAE " +
             (gae_ok ? "1.75, 1.5, 1 exact" : "mismatch");
  o.fingerprint = format_double(ea) + format_double(ec) + (gae_ok ? "1" : "0");
  return o;
}

struct Training {
  rl::PolicyParams policy;
  double t_ref = 0.0;
  double seconds = 0.0;
};

Training train_case3(std::uint64_t seed, bool verbose) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto family = bench::case_family(3);
  const auto sampler = family.sampler();
  rl::PpoConfig cfg;
  cfg.total_steps = 20000;
  cfg.env.time_source = rl::TimeSource::kProxy;
  cfg.env.t_ref = rl::calibrate_t_ref_proxy(sampler, 20, derive_seed(seed, 77));
  auto result = rl::ppo_train(cfg, sampler, family.case_tag(), seed, [&](const rl::TrainLogRow& r) {
    if (verbose) {
      std::fprintf(stderr, "  update %d mean_return %.3f entropy %.3f\n", r.update, r.mean_return, r.entropy);
    }
  });
  return {std::move(result.policy), cfg.env.t_ref, wall_seconds(t0)};
}

Outcome criterion8(std::uint64_t seed, const Training& training) {
  const auto t0 = std::chrono::steady_clock::now();
  bench::RunConfig cfg;
  cfg.family = bench::case_family(3);
  cfg.n_instances = 20;
  cfg.seed = derive_seed(seed, 8);
  cfg.methods = {bench::Method::kRl, bench::Method::kRand, bench::Method::kExp, bench::Method::kClassic};
  const auto report = bench::run_bench(cfg, &training.policy);
  std::vector<double> work[4];
  bool all_converged = true;
  std::ostringstream fp;
  fp << rl::to_json(training.policy).dump() << "\n" << format_double(training.t_ref) << "\n";
  for (const auto& r : report.rows) {
    const int m = static_cast<int>(bench::method_from_string(r.method));
    work[m].push_back(static_cast<double>(r.pivots));
    all_converged = all_converged && r.converged;
    fp << r.method << " " << r.index << " " << r.iterations << " " << r.pivots << " " << format_double(r.objective)
       << "\n";
  }
  int wins[4] = {0, 0, 0, 0}, pairs[4] = {0, 0, 0, 0};
  for (int m = 1; m < 4; ++m) {
    for (std::size_t i = 0; i < work[0].size(); ++i) {
      if (work[0][i] == work[m][i]) continue;
      ++pairs[m];
      if (work[0][i] < work[m][i]) ++wins[m];
    }
  }
  const double med[4] = {median(work[0]), median(work[1]), median(work[2]), median(work[3])};
  const double p_classic = sign_test_p(wins[3], pairs[3]);
  const double secs = training.seconds + wall_seconds(t0);
  Outcome o;
  o.pass = all_converged && p_classic < 0.05 && med[0] < med[3] && med[0] <= med[1] && med[0] < med[2] &&
           secs < 7200.0;
  o.detail = "median master pivots rl " + fmt("%.1f", med[0]) + ", rand " + fmt("%.1f", med[1]) + ", exp " +
             fmt("%.1f", med[2]) + ", classic " + fmt("%.1f", med[3]) + "; wins vs classic " +
             std::to_string(wins[3]) + "/" + std::to_string(pairs[3]) + " (p=" + fmt("%.4f", p_classic) +
             "), vs rand " + std::to_string(wins[1]) + "/" + std::to_string(pairs[1]) + " (p=" +
             fmt("%.4f", sign_test_p(wins[1], pairs[1])) + "), vs exp " + std::to_string(wins[2]) + "/" +
             std::to_string(pairs[2]) + " (p=" + fmt("%.4f", sign_test_p(wins[2], pairs[2])) + "); " +
             fmt("%.0f", secs) + " s";
  o.fingerprint = fp.str();
  return o;
}

PassResult run_pass(std::uint64_t seed, bool verbose) {
  PassResult r;
  auto note = [&](const char* what) {
    if (verbose) std::fprintf(stderr, "%s\n", what);
  };
  note("training the N_p = 3 policy");
  const auto training = train_case3(seed, verbose);
  ConvexState st;
  note("criterion 1");
  r.c[0] = criterion1(seed, st);
  note("criterion 2");
  r.c[1] = criterion2(st);
  note("criterion 3");
  r.c[2] = criterion3(st);
  note("criterion 4");
  r.c[3] = criterion4(st);
  note("criterion 5");
  r.c[4] = criterion5(seed, training.policy);
  note("criterion 6");
  r.c[5] = criterion6(seed);
  note("criterion 7");
  r.c[6] = criterion7();
  note("criterion 8");
  r.c[7] = criterion8(seed, training);
  return r;
}

std::set<int> parse_list(const std::string& s) {
  std::set<int> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.insert(std::stoi(item));
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria 1 to 9"};
  std::uint64_t seed = 1;
  std::string known = "", report_path;
  bool verbose = false;
  app.add_option("--seed", seed, "Base seed")->capture_default_str();
  app.add_option("--known-failures", known, "Comma-separated criteria allowed to fail");
  app.add_option("--report", report_path, "Also write the result lines to this file");
  app.add_flag("--verbose", verbose, "Progress on stderr");
  CLI11_PARSE(app, argc, argv);

  const auto first = run_pass(seed, verbose);
  if (verbose) std::fprintf(stderr, "second pass\n");
  const auto second = run_pass(seed, verbose);

  Outcome results[kCriteria];
  for (int i = 0; i < 8; ++i) results[i] = first.c[i];
  std::string differing;
  for (int i = 0; i < 8; ++i) {
    if (first.c[i].fingerprint != second.c[i].fingerprint) differing += " " + std::to_string(i + 1);
  }
  results[8].pass = differing.empty();
  results[8].detail = differing.empty() ? "criteria 1-8 reproduce byte-identically (CPU-second fields excluded)"
                                        : "fingerprints differ for criteria" + differing;

  const auto allowed = parse_list(known);
  std::string text;
  bool unexpected = false;
  for (int i = 0; i < kCriteria; ++i) {
    text += "criterion " + std::to_string(i + 1) + ": " + (results[i].pass ? "PASS" : "FAIL") + "  " +
            results[i].detail + "\n";
    if (!results[i].pass && !allowed.count(i + 1)) unexpected = true;
  }
  std::fputs(text.c_str(), stdout);
  if (!report_path.empty()) write_file(report_path, text);
  return unexpected ? 1 : 0;
}
