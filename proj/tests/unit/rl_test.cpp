#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <memory>

#include "igbd/cstr/convex_family.hpp"
#include "igbd/cstr/cstr_problem.hpp"
#include "igbd/rl/env.hpp"
#include "igbd/rl/mlp.hpp"
#include "igbd/rl/ppo.hpp"
#include "igbd/util/format.hpp"
#include "igbd/util/stats.hpp"

using namespace igbd;
using namespace igbd::rl;

namespace {

std::unique_ptr<gbd::DecomposedProblem> convex(int dim, std::uint64_t seed) {
  return std::make_unique<cstr::ConvexFamilyProblem>(cstr::build_convex_family(dim, seed));
}

ProblemSampler convex_sampler(int dim) {
  return [dim](std::uint64_t s) { return convex(dim, s); };
}

EnvConfig proxy_env(double t_ref) {
  EnvConfig c;
  c.time_source = TimeSource::kProxy;
  c.t_ref = t_ref;
  return c;
}

std::vector<double> random_state(Rng& rng, int dim) {
  std::vector<double> s(dim);
  for (double& x : s) x = rng.uniform(-1.0, 1.0);
  return s;
}

}  // namespace

TEST(Reward, NoImprovement) { EXPECT_DOUBLE_EQ(reward(0.2, 0.2, 0.1, 0.1, 2.0), -2.0); }

TEST(Reward, HalvedGap) { EXPECT_NEAR(reward(0.2, 0.2, 0.1, 0.05, 2.0), -2.0 + 2.0 * std::log(2.0), 1e-12); }

TEST(Reward, ClosedGapUsesLowerTolerance) {
  const double r = reward(0.0, 1.0, 0.01, 0.0, 2.0, 1e-3);
  EXPECT_NEAR(r + 1.0, 2.0 * std::log(0.01 / 1e-3), 1e-12);
}

TEST(Reward, Decomposition) {
  Rng rng(3);
  for (int n = 0; n < 200; ++n) {
    const double t = rng.uniform(0.0, 5.0), tr = rng.uniform(0.1, 2.0);
    const double ep = rng.uniform(1e-4, 1.0), ec = rng.uniform(0.0, 1.0), al = rng.uniform(0.5, 3.0);
    EXPECT_NEAR(reward(t, tr, ep, ec, al) + 1.0 + t / tr, al * std::log(ep / std::max(ec, 1e-3)), 1e-12);
  }
}

TEST(Reward, RejectsNonPositiveReference) { EXPECT_THROW(reward(1.0, 0.0, 0.1, 0.1, 2.0), std::invalid_argument); }

TEST(TimeSource, StringRoundTrip) {
  EXPECT_EQ(time_source_from_string(to_string(TimeSource::kCpu)), TimeSource::kCpu);
  EXPECT_EQ(time_source_from_string(to_string(TimeSource::kProxy)), TimeSource::kProxy);
  EXPECT_THROW(time_source_from_string("wall"), std::invalid_argument);
}

TEST(Env, InitialStateFollowsTheInitializationLine) {
  IgbdEnv env(proxy_env(100.0));
  const auto s = env.reset(convex(8, 1));
  ASSERT_EQ(s.size(), 3u + kStateTail);
  const std::size_t t = s.size() - kStateTail;
  EXPECT_EQ(s[t + 0], 0.0);
  EXPECT_EQ(s[t + 1], 0.3);
  EXPECT_EQ(s[t + 2], 0.3);
  EXPECT_EQ(s[t + 3], 1.0);
  EXPECT_EQ(s[t + 4], 0.0);
  EXPECT_EQ(s[t + 5], 0.0);
}

TEST(Env, CaseStudyStateDimension) {
  IgbdEnv env(proxy_env(100.0));
  const auto table = cstr::load_product_table(3);
  const auto& s = env.reset(std::make_unique<cstr::CstrProblem>(cstr::sample_instance(table, 9)));
  EXPECT_EQ(s.size(), 3u + 1u + 6u);
  for (std::size_t k = 0; k < 4; ++k) {
    EXPECT_GE(s[k], 0.0);
    EXPECT_LE(s[k], 1.0);
  }
}

TEST(Env, ResetIsRepeatable) {
  IgbdEnv a(proxy_env(100.0)), b(proxy_env(100.0));
  EXPECT_EQ(a.reset(convex(8, 4)), b.reset(convex(8, 4)));
  a.step(3);
  EXPECT_EQ(a.reset(convex(8, 4)), b.state());
}

TEST(Env, LowestActionSolvesTheMasterTightly) {
  IgbdEnv env(proxy_env(100.0));
  env.reset(convex(8, 2));
  int steps = 0;
  while (env.active()) {
    const auto r = env.step(0);
    EXPECT_DOUBLE_EQ(r.tol, 1e-3);
    EXPECT_LE(r.record.realized, 1e-3);
    ++steps;
  }
  EXPECT_FALSE(env.session().trace().truncated);
  EXPECT_TRUE(env.session().trace().converged);
  EXPECT_LT(steps, 50);
}

TEST(Env, TimePenaltiesTelescopeToTotalWork) {
  const double t_ref = 37.0;
  IgbdEnv env(proxy_env(t_ref));
  env.reset(convex(8, 5));
  double time_terms = 0.0, log_terms = 0.0;
  double eps_prev = 1.0;
  Rng rng(1);
  while (env.active()) {
    const auto r = env.step(static_cast<int>(rng.index(gbd::kNumActions)));
    const double eps = state_gap(env.session().gap());
    const double r2 = 2.0 * std::log(eps_prev / std::max(eps, 1e-3));
    time_terms += r.reward - r2 + 1.0;
    log_terms += r2;
    eps_prev = eps;
  }
  const auto& tr = env.session().trace();
  EXPECT_NEAR(time_terms, -static_cast<double>(tr.total_pivots()) / t_ref, 1e-9);
  // Monotone, unclamped gaps telescope.
  bool monotone = true;
  for (std::size_t l = 1; l < tr.records.size(); ++l) monotone = monotone && tr.records[l].gap <= tr.records[l - 1].gap;
  for (std::size_t l = 0; l + 1 < tr.records.size(); ++l) monotone = monotone && tr.records[l].gap >= 1e-3;
  if (monotone && tr.records.front().gap <= 1.0) {
    EXPECT_NEAR(log_terms, 2.0 * std::log(1.0 / std::max(tr.records.back().gap, 1e-3)), 1e-9);
  }
}

TEST(Env, LoosestActionHitsTheIterationLimit) {
  IgbdEnv env(proxy_env(100.0));
  env.reset(convex(10, 9));
  StepResult last;
  int steps = 0;
  while (env.active()) {
    last = env.step(gbd::kNumActions - 1);
    ++steps;
  }
  EXPECT_EQ(steps, 50);
  EXPECT_TRUE(last.done);
  EXPECT_TRUE(last.truncated);
  EXPECT_TRUE(env.session().trace().truncated);
}

TEST(Env, RejectsBadUse) {
  IgbdEnv env(proxy_env(100.0));
  EXPECT_THROW(env.step(0), std::logic_error);
  env.reset(convex(6, 1));
  EXPECT_THROW(env.step(gbd::kNumActions), std::out_of_range);
  EXPECT_THROW(IgbdEnv(proxy_env(0.0)), std::invalid_argument);
}

TEST(Env, ProxyCalibrationIsAMedian) {
  const double t = calibrate_t_ref_proxy(convex_sampler(8), 5, 11);
  std::vector<double> piv;
  for (int i = 0; i < 5; ++i) {
    auto p = convex(8, derive_seed(11, i));
    gbd::IgbdSession s(*p, {});
    piv.push_back(static_cast<double>(s.step(1e-3).master_pivots));
  }
  EXPECT_DOUBLE_EQ(t, std::max(1.0, median(piv)));
}

TEST(Mlp, ShapesAndRoundTrip) {
  Rng rng(1);
  Mlp m({4, 5, 3}, rng);
  EXPECT_EQ(m.num_params(), 4u * 5 + 5 + 5 * 3 + 3);
  const auto back = mlp_from_json(to_json(m));
  EXPECT_EQ(back.params(), m.params());
  EXPECT_EQ(back.forward({0.1, 0.2, 0.3, 0.4}), m.forward({0.1, 0.2, 0.3, 0.4}));
  EXPECT_THROW(m.forward({1.0}), std::invalid_argument);
}

TEST(Mlp, BackwardMatchesFiniteDifferences) {
  Rng rng(2);
  Mlp m({3, 6, 6, 2}, rng);
  const std::vector<double> x{0.3, -0.7, 0.5}, w{0.8, -1.3};
  auto f = [&](const Mlp& net) {
    const auto y = net.forward(x);
    return w[0] * y[0] + w[1] * y[1];
  };
  Mlp::Tape tape;
  m.forward(x, tape);
  std::vector<double> g(m.num_params(), 0.0);
  m.backward(tape, w, g);
  for (std::size_t k = 0; k < m.num_params(); ++k) {
    Mlp p = m, q = m;
    p.params()[k] += 1e-6;
    q.params()[k] -= 1e-6;
    EXPECT_NEAR(g[k], (f(p) - f(q)) / 2e-6, 1e-7) << k;
  }
}

TEST(Adam, FirstStepMovesByTheLearningRate) {
  Adam opt(2, 0.1);
  std::vector<double> p{1.0, -1.0};
  opt.step(p, {3.0, -0.5});
  EXPECT_NEAR(p[0], 0.9, 1e-6);
  EXPECT_NEAR(p[1], -0.9, 1e-6);
}

TEST(Gae, HandComputedEpisode) {
  const auto a = compute_gae({1, 1, 1}, {0, 0, 0}, {0, 0, 0}, {0, 0, 1}, {0, 0, 1}, 0.5, 1.0);
  EXPECT_EQ(a, (std::vector<double>{1.75, 1.5, 1.0}));
}

TEST(Gae, TruncationBootstrapsAndEpisodesDoNotLeak) {
  // Step 1 ends a truncated episode (next value 2); step 2 starts a new one.
  const auto a = compute_gae({1, 1, 5}, {0, 0, 0}, {0, 2, 0}, {0, 0, 1}, {0, 1, 1}, 0.5, 1.0);
  EXPECT_DOUBLE_EQ(a[1], 1.0 + 0.5 * 2.0);
  EXPECT_DOUBLE_EQ(a[0], 1.0 + 0.5 * 0.0 + 0.5 * a[1]);
  EXPECT_DOUBLE_EQ(a[2], 5.0);
  EXPECT_THROW(compute_gae({1}, {0, 0}, {0}, {0}, {0}, 0.5, 1.0), std::invalid_argument);
}

TEST(Clip, SurrogateExamples) {
  EXPECT_DOUBLE_EQ(clipped_surrogate(2.0, 1.0, 0.15), 1.15);
  EXPECT_DOUBLE_EQ(clipped_surrogate(2.0, 3.0, 0.15), 1.15 * 3.0);
  EXPECT_DOUBLE_EQ(clipped_surrogate(0.5, 1.0, 0.15), 0.5);
  EXPECT_DOUBLE_EQ(clipped_surrogate(0.5, -1.0, 0.15), -0.85);
  EXPECT_DOUBLE_EQ(clipped_surrogate(1.1, 2.0, 0.15), 2.2);
}

class LossGradient : public ::testing::TestWithParam<double> {};

TEST_P(LossGradient, MatchesCentralDifferences) {
  PpoConfig cfg;
  cfg.hidden_actor = 8;
  cfg.hidden_critic = 8;
  cfg.entropy_coef = GetParam();
  auto pol = make_policy(5, cfg, 0, 7);
  // Larger output weights so the logits differ noticeably.
  for (double& w : pol.actor.params()) w *= 20.0;
  Rng rng(8);
  Minibatch b;
  for (int i = 0; i < 6; ++i) {
    b.states.push_back(random_state(rng, 5));
    b.actions.push_back(static_cast<int>(rng.index(gbd::kNumActions)));
    const auto logits = pol.actor.forward(b.states.back());
    const auto p = softmax(logits);
    // Ratios 0.5, 0.8, 1.05, 1.1, 1.5, 2.0: both clipped and unclipped branches.
    const double ratio[] = {0.5, 0.8, 1.05, 1.1, 1.5, 2.0};
    b.old_log_probs.push_back(std::log(p[b.actions.back()]) - std::log(ratio[i]));
    b.advantages.push_back(i % 2 == 0 ? rng.uniform(0.5, 2.0) : -rng.uniform(0.5, 2.0));
    b.returns.push_back(rng.uniform(-3.0, 3.0));
  }
  std::vector<double> ga, gc;
  ppo_loss(pol, b, cfg, &ga, &gc);
  auto check = [&](Mlp PolicyParams::*net, const std::vector<double>& g) {
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) {
      auto p = pol, q = pol;
      const double h = 1e-6;
      (p.*net).params()[k] += h;
      (q.*net).params()[k] -= h;
      const double fd = (ppo_loss(p, b, cfg).total - ppo_loss(q, b, cfg).total) / (2 * h);
      num += (fd - g[k]) * (fd - g[k]);
      den += g[k] * g[k];
    }
    EXPECT_GT(den, 0.0);
    EXPECT_LE(std::sqrt(num / den), 1e-4);
  };
  check(&PolicyParams::actor, ga);
  check(&PolicyParams::critic, gc);
}

INSTANTIATE_TEST_SUITE_P(EntropyCoef, LossGradient, ::testing::Values(0.0, 0.05));

TEST(Act, EqualLogitsPickTheLowestAction) {
  PpoConfig cfg;
  auto pol = make_policy(4, cfg, 0, 1);
  std::fill(pol.actor.params().begin(), pol.actor.params().end(), 0.0);
  Rng rng(1);
  EXPECT_EQ(act(pol, {0.1, 0.2, 0.3, 0.4}, ActMode::kDeterministic, rng), 0);
  EXPECT_EQ(gbd::action_value(0), -1.0);
}

TEST(Act, DominantLogitIsAlmostSure) {
  PpoConfig cfg;
  auto pol = make_policy(4, cfg, 0, 1);
  auto& w = pol.actor.params();
  std::fill(w.begin(), w.end(), 0.0);
  w[w.size() - gbd::kNumActions + 7] = 50.0;
  Rng rng(2);
  for (int n = 0; n < 1000; ++n) EXPECT_EQ(act(pol, {0.1, 0.2, 0.3, 0.4}, ActMode::kStochastic, rng), 7);
  EXPECT_EQ(act(pol, {0.1, 0.2, 0.3, 0.4}, ActMode::kDeterministic, rng), 7);
}

TEST(Act, ShiftInvariance) {
  PpoConfig cfg;
  const auto pol = make_policy(6, cfg, 0, 5);
  auto shifted = pol;
  auto& w = shifted.actor.params();
  for (int k = 0; k < gbd::kNumActions; ++k) w[w.size() - gbd::kNumActions + k] += 3.7;
  Rng rng(4), dummy(0);
  for (int n = 0; n < 100; ++n) {
    const auto s = random_state(rng, 6);
    EXPECT_EQ(act(pol, s, ActMode::kDeterministic, dummy), act(shifted, s, ActMode::kDeterministic, dummy));
  }
}

TEST(Act, StochasticFrequenciesFollowSoftmax) {
  PpoConfig cfg;
  auto pol = make_policy(3, cfg, 0, 9);
  for (double& x : pol.actor.params()) x *= 30.0;
  const std::vector<double> s{0.2, -0.4, 0.9};
  const auto p = softmax(pol.actor.forward(s));
  std::vector<int> count(gbd::kNumActions, 0);
  Rng rng(10);
  const int n = 20000;
  for (int i = 0; i < n; ++i) ++count[act(pol, s, ActMode::kStochastic, rng)];
  for (int k = 0; k < gbd::kNumActions; ++k) EXPECT_NEAR(count[k] / double(n), p[k], 0.015);
}

TEST(Policy, RoundTripKeepsActions) {
  PpoConfig cfg;
  const auto pol = make_policy(10, cfg, 3, 21);
  EXPECT_EQ(pol.actor.sizes(), (std::vector<int>{10, 64, 64, 64, 11}));
  EXPECT_EQ(pol.critic.sizes(), (std::vector<int>{10, 64, 64, 1}));
  const auto path = (std::filesystem::temp_directory_path() / "igbd_policy_rt.json").string();
  save_policy(pol, path);
  const auto back = load_policy(path);
  std::filesystem::remove(path);
  EXPECT_EQ(to_json(back).dump(), to_json(pol).dump());
  EXPECT_EQ(back.case_tag, 3);
  Rng rng(5), dummy(0);
  for (int n = 0; n < 100; ++n) {
    const auto s = random_state(rng, 10);
    EXPECT_EQ(act(back, s, ActMode::kDeterministic, dummy), act(pol, s, ActMode::kDeterministic, dummy));
    EXPECT_EQ(back.critic.forward(s), pol.critic.forward(s));
  }
}

TEST(Policy, RejectsMalformedDocuments) {
  PpoConfig cfg;
  auto j = to_json(make_policy(4, cfg, 0, 1));
  auto bad = j;
  bad["schema"] = "other";
  EXPECT_THROW(policy_from_json(bad), std::invalid_argument);
  bad = j;
  bad["state_dim"] = 5;
  EXPECT_THROW(policy_from_json(bad), std::invalid_argument);
  bad = j;
  bad["actor"]["layers"][0]["weight"].erase(0);
  EXPECT_THROW(policy_from_json(bad), std::invalid_argument);
}

TEST(Config, JsonRoundTripAndValidation) {
  PpoConfig c;
  c.env.t_ref = 123.0;
  c.env.time_source = TimeSource::kCpu;
  EXPECT_EQ(to_json(ppo_config_from_json(to_json(c))).dump(), to_json(c).dump());
  c.clip = 1.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = PpoConfig{};
  c.gamma = 1.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(Train, SmokeRunIsOneUpdateAndDeterministic) {
  PpoConfig cfg;
  cfg.total_steps = 512;
  cfg.env = proxy_env(50.0);
  const auto a = ppo_train(cfg, convex_sampler(6), 0, 42);
  const auto b = ppo_train(cfg, convex_sampler(6), 0, 42);
  ASSERT_EQ(a.log.size(), 1u);
  EXPECT_EQ(a.steps, 512);
  EXPECT_EQ(to_json(a.policy).dump(), to_json(b.policy).dump());
  EXPECT_EQ(train_log_csv(a.log), train_log_csv(b.log));
  EXPECT_TRUE(std::isfinite(a.log[0].mean_return));
  EXPECT_GT(a.log[0].episodes, 0);
  EXPECT_EQ(train_log_csv(train_log_from_csv(train_log_csv(a.log))), train_log_csv(a.log));
  const auto c = ppo_train(cfg, convex_sampler(6), 0, 43);
  EXPECT_NE(to_json(c.policy).dump(), to_json(a.policy).dump());
}

TEST(Train, LearnedPolicyStaysInTheToleranceRange) {
  PpoConfig cfg;
  cfg.total_steps = 512;
  cfg.env = proxy_env(50.0);
  const auto res = ppo_train(cfg, convex_sampler(6), 0, 1);
  LearnedPolicy pol(res.policy);
  for (std::uint64_t s = 100; s < 105; ++s) {
    auto p = convex(8, s);
    const auto tr = gbd::run_igbd(*p, pol, {}, s);
    for (const auto& r : tr.records) {
      EXPECT_GE(r.tol, gbd::kTolLower);
      EXPECT_LE(r.tol, gbd::kTolUpper);
    }
  }
}

TEST(Train, BeatsTheUntrainedPolicyOnHeldOutInstances) {
  PpoConfig cfg;
  cfg.total_steps = 20000;
  cfg.env = proxy_env(calibrate_t_ref_proxy(convex_sampler(10), 20, 7));
  const auto trained = ppo_train(cfg, convex_sampler(10), 0, 2024).policy;
  const auto untrained = make_policy(trained.state_dim(), cfg, 0, derive_seed(2024, 1));
  int wins = 0, n = 0;
  for (int i = 0; i < 20; ++i) {
    const auto seed = derive_seed(999, i);
    Rng rng(seed);
    const double a = episode_return(trained, convex(10, seed), cfg.env, ActMode::kDeterministic, rng);
    double b = 0.0;
    for (int k = 0; k < 5; ++k) {
      Rng rk(derive_seed(seed, k));
      b += episode_return(untrained, convex(10, seed), cfg.env, ActMode::kStochastic, rk) / 5.0;
    }
    if (a != b) {
      ++n;
      if (a > b) ++wins;
    }
  }
  EXPECT_LT(sign_test_p(wins, n), 0.05) << wins << " wins out of " << n;
}

TEST(Stats, SignTestAndSummaries) {
  EXPECT_NEAR(sign_test_p(15, 20), 0.020694732666015625, 1e-15);
  EXPECT_DOUBLE_EQ(sign_test_p(0, 20), 1.0);
  EXPECT_DOUBLE_EQ(median({3, 1, 2}), 2.0);
  EXPECT_DOUBLE_EQ(median({4, 1, 2, 3}), 2.5);
  EXPECT_DOUBLE_EQ(mean({1, 2, 3}), 2.0);
  EXPECT_DOUBLE_EQ(stddev({1, 2, 3}), 1.0);
}
