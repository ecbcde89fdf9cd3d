#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "igbd/gbd/policy.hpp"
#include "igbd/rl/env.hpp"
#include "igbd/rl/mlp.hpp"
#include "igbd/util/random.hpp"

namespace igbd::rl {

struct PpoConfig {
  double gamma = 0.99;
  double clip = 0.15;
  double learning_rate = 5e-4;
  int rollout_steps = 512;
  int batch_size = 128;
  int epochs_per_update = 10;
  double gae_lambda = 0.95;
  double value_coef = 0.5;
  double entropy_coef = 0.0;
  long total_steps = 20000;
  // L2 norm bound on each network's minibatch gradient (<= 0 disables).
  double max_grad_norm = 0.5;
  bool normalize_advantage = true;
  int hidden_actor = 64;
  int layers_actor = 3;
  int hidden_critic = 64;
  int layers_critic = 2;
  EnvConfig env{};

  void validate() const;
};

nlohmann::json to_json(const PpoConfig& c);
PpoConfig ppo_config_from_json(const nlohmann::json& j);

inline constexpr const char* kPolicySchema = "igbd.policy.v1";

struct PolicyParams {
  Mlp actor;   // state -> K logits
  Mlp critic;  // state -> value
  int case_tag = 0;  // N_p, 0 for the convex family
  std::uint64_t seed = 0;
  nlohmann::json config = nlohmann::json::object();

  int state_dim() const { return actor.input_dim(); }
};

// Actor [d, h x layers, K] with a 0.01 output gain (near-uniform start),
// critic [d, h x layers, 1].
PolicyParams make_policy(int state_dim, const PpoConfig& config, int case_tag, std::uint64_t seed);

nlohmann::json to_json(const PolicyParams& p);
PolicyParams policy_from_json(const nlohmann::json& j);
void save_policy(const PolicyParams& p, const std::string& path);
PolicyParams load_policy(const std::string& path);

std::vector<double> softmax(const std::vector<double>& logits);

enum class ActMode { kStochastic, kDeterministic };

// Deterministic: argmax logit, ties to the lower index. Stochastic: one
// categorical draw from softmax(logits).
int act(const PolicyParams& p, const std::vector<double>& state, ActMode mode, Rng& rng);
int argmax_lowest(const std::vector<double>& v);

// A_t = delta_t + gamma lambda A_{t+1} within an episode, with
// delta_t = r_t + gamma (1 - terminal_t) next_value_t - value_t. The
// recursion restarts after every episode_end (terminal, truncated, or end
// of the rollout); truncated steps bootstrap from next_value_t.
std::vector<double> compute_gae(const std::vector<double>& rewards, const std::vector<double>& values,
                                const std::vector<double>& next_values, const std::vector<char>& terminal,
                                const std::vector<char>& episode_end, double gamma, double lambda);

struct Minibatch {
  std::vector<std::vector<double>> states;
  std::vector<int> actions;
  std::vector<double> old_log_probs;
  std::vector<double> advantages;
  std::vector<double> returns;

  std::size_t size() const { return actions.size(); }
};

struct LossTerms {
  double policy_loss = 0.0;  // -mean min(rho A, clip(rho) A)
  double value_loss = 0.0;   // mean (V - R)^2
  double entropy = 0.0;
  double total = 0.0;        // policy + value_coef * value - entropy_coef * entropy
  double approx_kl = 0.0;
  double clip_fraction = 0.0;
};

// Clipped-surrogate loss on a minibatch; when the gradient pointers are
// given, d(total)/d(params) is written into them (resized as needed).
LossTerms ppo_loss(const PolicyParams& p, const Minibatch& batch, const PpoConfig& config,
                   std::vector<double>* actor_grad = nullptr, std::vector<double>* critic_grad = nullptr);

// The per-sample clipped surrogate min(rho A, clip(rho, 1-c, 1+c) A).
double clipped_surrogate(double ratio, double advantage, double clip);

struct TrainLogRow {
  int update = 0;
  long steps = 0;
  int episodes = 0;
  double mean_return = 0.0;
  double mean_length = 0.0;
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double approx_kl = 0.0;
  double clip_fraction = 0.0;
};

std::string train_log_csv(const std::vector<TrainLogRow>& rows);
std::vector<TrainLogRow> train_log_from_csv(const std::string& text);

struct TrainResult {
  PolicyParams policy;
  std::vector<TrainLogRow> log;
  long steps = 0;
  int episodes = 0;
};

// ceil(total_steps / rollout_steps) updates. Episode e runs on
// sampler(derive_seed(derive_seed(seed, 2), e)); initialization, action
// sampling and minibatch shuffling use further derived streams.
// Throws std::runtime_error when a loss becomes non-finite.
TrainResult ppo_train(const PpoConfig& config, const ProblemSampler& sampler, int case_tag, std::uint64_t seed,
                      const std::function<void(const TrainLogRow&)>& on_update = {});

// Return of one full episode on problem.
double episode_return(const PolicyParams& p, std::unique_ptr<gbd::DecomposedProblem> problem, const EnvConfig& env,
                      ActMode mode, Rng& rng);

// Greedy trained policy plugged into the iGBD loop.
class LearnedPolicy : public gbd::TolerancePolicy {
 public:
  explicit LearnedPolicy(PolicyParams params, double tol_lo = gbd::kTolLower, double tol_hi = gbd::kTolUpper)
      : params_(std::move(params)), tol_lo_(tol_lo), tol_hi_(tol_hi) {}
  std::string name() const override { return "rl"; }
  double choose(const gbd::IgbdSession& session, Rng& rng) override;

 private:
  PolicyParams params_;
  double tol_lo_, tol_hi_;
};

}  // namespace igbd::rl
