#include "igbd/rl/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <stdexcept>

#include "igbd/util/format.hpp"

namespace igbd::rl {

void PpoConfig::validate() const {
  if (!(gamma >= 0.0 && gamma < 1.0)) throw std::invalid_argument("gamma must lie in [0, 1)");
  if (!(clip > 0.0 && clip < 1.0)) throw std::invalid_argument("clip must lie in (0, 1)");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning rate must be positive");
  if (rollout_steps < 1 || batch_size < 1 || epochs_per_update < 1) {
    throw std::invalid_argument("rollout_steps, batch_size and epochs_per_update must be positive");
  }
  if (!(gae_lambda >= 0.0 && gae_lambda <= 1.0)) throw std::invalid_argument("gae_lambda must lie in [0, 1]");
  if (total_steps < 1) throw std::invalid_argument("total_steps must be positive");
  if (hidden_actor < 1 || hidden_critic < 1 || layers_actor < 1 || layers_critic < 1) {
    throw std::invalid_argument("network sizes must be positive");
  }
  if (!(env.t_ref > 0.0)) throw std::invalid_argument("t_ref must be positive");
}

nlohmann::json to_json(const PpoConfig& c) {
  return {{"gamma", c.gamma},
          {"clip", c.clip},
          {"learning_rate", c.learning_rate},
          {"rollout_steps", c.rollout_steps},
          {"batch_size", c.batch_size},
          {"epochs_per_update", c.epochs_per_update},
          {"gae_lambda", c.gae_lambda},
          {"value_coef", c.value_coef},
          {"entropy_coef", c.entropy_coef},
          {"total_steps", c.total_steps},
          {"max_grad_norm", c.max_grad_norm},
          {"normalize_advantage", c.normalize_advantage},
          {"hidden_actor", c.hidden_actor},
          {"layers_actor", c.layers_actor},
          {"hidden_critic", c.hidden_critic},
          {"layers_critic", c.layers_critic},
          {"time_source", to_string(c.env.time_source)},
          {"t_ref", c.env.t_ref},
          {"alpha", c.env.alpha},
          {"tol_lo", c.env.tol_lo},
          {"tol_hi", c.env.tol_hi},
          {"eps_tol", c.env.igbd.eps_tol},
          {"t_max", c.env.igbd.t_max}};
}

PpoConfig ppo_config_from_json(const nlohmann::json& j) {
  PpoConfig c;
  c.gamma = j.value("gamma", c.gamma);
  c.clip = j.value("clip", c.clip);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.rollout_steps = j.value("rollout_steps", c.rollout_steps);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.epochs_per_update = j.value("epochs_per_update", c.epochs_per_update);
  c.gae_lambda = j.value("gae_lambda", c.gae_lambda);
  c.value_coef = j.value("value_coef", c.value_coef);
  c.entropy_coef = j.value("entropy_coef", c.entropy_coef);
  c.total_steps = j.value("total_steps", c.total_steps);
  c.max_grad_norm = j.value("max_grad_norm", c.max_grad_norm);
  c.normalize_advantage = j.value("normalize_advantage", c.normalize_advantage);
  c.hidden_actor = j.value("hidden_actor", c.hidden_actor);
  c.layers_actor = j.value("layers_actor", c.layers_actor);
  c.hidden_critic = j.value("hidden_critic", c.hidden_critic);
  c.layers_critic = j.value("layers_critic", c.layers_critic);
  c.env.time_source = time_source_from_string(j.value("time_source", to_string(c.env.time_source)));
  c.env.t_ref = j.value("t_ref", c.env.t_ref);
  c.env.alpha = j.value("alpha", c.env.alpha);
  c.env.tol_lo = j.value("tol_lo", c.env.tol_lo);
  c.env.tol_hi = j.value("tol_hi", c.env.tol_hi);
  c.env.igbd.eps_tol = j.value("eps_tol", c.env.igbd.eps_tol);
  c.env.igbd.t_max = j.value("t_max", c.env.igbd.t_max);
  return c;
}

PolicyParams make_policy(int state_dim, const PpoConfig& config, int case_tag, std::uint64_t seed) {
  if (state_dim < 1) throw std::invalid_argument("state dimension must be positive");
  Rng rng(seed);
  std::vector<int> a{state_dim}, c{state_dim};
  for (int l = 0; l < config.layers_actor; ++l) a.push_back(config.hidden_actor);
  a.push_back(gbd::kNumActions);
  for (int l = 0; l < config.layers_critic; ++l) c.push_back(config.hidden_critic);
  c.push_back(1);
  PolicyParams p;
  p.actor = Mlp(a, rng, 0.01);
  p.critic = Mlp(c, rng, 1.0);
  p.case_tag = case_tag;
  p.seed = seed;
  p.config = to_json(config);
  return p;
}

nlohmann::json to_json(const PolicyParams& p) {
  return {{"schema", kPolicySchema},
          {"case", p.case_tag},
          {"state_dim", p.state_dim()},
          {"n_actions", gbd::kNumActions},
          {"activation", "tanh"},
          {"seed", p.seed},
          {"config", p.config},
          {"actor", to_json(p.actor)},
          {"critic", to_json(p.critic)}};
}

PolicyParams policy_from_json(const nlohmann::json& j) {
  if (j.value("schema", "") != kPolicySchema) throw std::invalid_argument("not an igbd.policy.v1 document");
  if (j.value("activation", "") != "tanh") throw std::invalid_argument("unsupported activation");
  PolicyParams p;
  p.case_tag = j.at("case").get<int>();
  p.seed = j.at("seed").get<std::uint64_t>();
  p.config = j.value("config", nlohmann::json::object());
  p.actor = mlp_from_json(j.at("actor"));
  p.critic = mlp_from_json(j.at("critic"));
  const int dim = j.at("state_dim").get<int>();
  if (p.actor.input_dim() != dim || p.critic.input_dim() != dim) throw std::invalid_argument("state_dim mismatch");
  if (p.actor.output_dim() != gbd::kNumActions || j.at("n_actions").get<int>() != gbd::kNumActions) {
    throw std::invalid_argument("actor must have one output per action");
  }
  if (p.critic.output_dim() != 1) throw std::invalid_argument("critic must have one output");
  return p;
}

void save_policy(const PolicyParams& p, const std::string& path) { write_file(path, to_json(p).dump(1) + "\n"); }

PolicyParams load_policy(const std::string& path) { return policy_from_json(nlohmann::json::parse(read_file(path))); }

std::vector<double> softmax(const std::vector<double>& logits) {
  const double m = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double s = 0.0;
  for (std::size_t k = 0; k < logits.size(); ++k) s += p[k] = std::exp(logits[k] - m);
  for (double& v : p) v /= s;
  return p;
}

namespace {

std::vector<double> log_softmax(const std::vector<double>& logits) {
  const double m = *std::max_element(logits.begin(), logits.end());
  double s = 0.0;
  for (double z : logits) s += std::exp(z - m);
  const double lse = m + std::log(s);
  std::vector<double> out(logits.size());
  for (std::size_t k = 0; k < logits.size(); ++k) out[k] = logits[k] - lse;
  return out;
}

void clip_norm(std::vector<double>& g, double max_norm) {
  double sq = 0.0;
  for (double v : g) sq += v * v;
  const double norm = std::sqrt(sq);
  if (norm <= max_norm) return;
  const double s = max_norm / (norm + 1e-6);
  for (double& v : g) v *= s;
}

double value_of(const PolicyParams& p, const std::vector<double>& s) { return p.critic.forward(s)[0]; }

}  // namespace

int argmax_lowest(const std::vector<double>& v) {
  int best = 0;
  for (int k = 1; k < static_cast<int>(v.size()); ++k) {
    if (v[k] > v[best]) best = k;
  }
  return best;
}

int act(const PolicyParams& p, const std::vector<double>& state, ActMode mode, Rng& rng) {
  if (static_cast<int>(state.size()) != p.state_dim()) throw std::invalid_argument("state has the wrong dimension");
  const auto logits = p.actor.forward(state);
  if (mode == ActMode::kDeterministic) return argmax_lowest(logits);
  return static_cast<int>(rng.categorical(softmax(logits)));
}

std::vector<double> compute_gae(const std::vector<double>& rewards, const std::vector<double>& values,
                                const std::vector<double>& next_values, const std::vector<char>& terminal,
                                const std::vector<char>& episode_end, double gamma, double lambda) {
  const std::size_t n = rewards.size();
  if (values.size() != n || next_values.size() != n || terminal.size() != n || episode_end.size() != n) {
    throw std::invalid_argument("GAE inputs must have equal length");
  }
  std::vector<double> adv(n, 0.0);
  double next_adv = 0.0;
  for (std::size_t t = n; t-- > 0;) {
    const double boot = terminal[t] ? 0.0 : next_values[t];
    const double delta = rewards[t] + gamma * boot - values[t];
    const double carry = episode_end[t] ? 0.0 : next_adv;
    adv[t] = delta + gamma * lambda * carry;
    next_adv = adv[t];
  }
  return adv;
}

double clipped_surrogate(double ratio, double advantage, double clip) {
  return std::min(ratio * advantage, std::clamp(ratio, 1.0 - clip, 1.0 + clip) * advantage);
}

LossTerms ppo_loss(const PolicyParams& p, const Minibatch& b, const PpoConfig& cfg, std::vector<double>* actor_grad,
                   std::vector<double>* critic_grad) {
  const std::size_t n = b.size();
  if (n == 0) throw std::invalid_argument("empty minibatch");
  if (b.states.size() != n || b.old_log_probs.size() != n || b.advantages.size() != n || b.returns.size() != n) {
    throw std::invalid_argument("minibatch fields must have equal length");
  }
  if (actor_grad) actor_grad->assign(p.actor.num_params(), 0.0);
  if (critic_grad) critic_grad->assign(p.critic.num_params(), 0.0);
  const double inv = 1.0 / static_cast<double>(n);
  LossTerms L;
  Mlp::Tape tape;
  for (std::size_t i = 0; i < n; ++i) {
    const auto logits = p.actor.forward(b.states[i], tape);
    const auto logp = log_softmax(logits);
    const int a = b.actions[i];
    if (a < 0 || a >= static_cast<int>(logits.size())) throw std::out_of_range("minibatch action");
    const double ratio = std::exp(logp[a] - b.old_log_probs[i]);
    const double A = b.advantages[i];
    const double clipped = std::clamp(ratio, 1.0 - cfg.clip, 1.0 + cfg.clip);
    L.policy_loss -= inv * std::min(ratio * A, clipped * A);
    double ent = 0.0;
    for (double lp : logp) ent -= std::exp(lp) * lp;
    L.entropy += inv * ent;
    L.approx_kl += inv * ((ratio - 1.0) - std::log(ratio));
    if (std::abs(ratio - 1.0) > cfg.clip) L.clip_fraction += inv;

    if (actor_grad) {
      const bool active = ratio * A <= clipped * A;
      const double d_logp = active ? -inv * A * ratio : 0.0;
      std::vector<double> g(logits.size());
      for (std::size_t k = 0; k < logits.size(); ++k) {
        const double pk = std::exp(logp[k]);
        g[k] = d_logp * ((static_cast<int>(k) == a ? 1.0 : 0.0) - pk);
        // d(-c H)/dz_k = c p_k (log p_k + H)
        g[k] += cfg.entropy_coef * inv * pk * (logp[k] + ent);
      }
      p.actor.backward(tape, g, *actor_grad);
    }

    const double v = p.critic.forward(b.states[i], tape)[0];
    const double err = v - b.returns[i];
    L.value_loss += inv * err * err;
    if (critic_grad) p.critic.backward(tape, {cfg.value_coef * 2.0 * inv * err}, *critic_grad);
  }
  L.total = L.policy_loss + cfg.value_coef * L.value_loss - cfg.entropy_coef * L.entropy;
  return L;
}

std::string train_log_csv(const std::vector<TrainLogRow>& rows) {
  std::string out =
      "update,steps,episodes,mean_return,mean_length,policy_loss,value_loss,entropy,approx_kl,clip_fraction\n";
  for (const auto& r : rows) {
    out += join_csv({std::to_string(r.update), std::to_string(r.steps), std::to_string(r.episodes),
                     format_double(r.mean_return), format_double(r.mean_length), format_double(r.policy_loss),
                     format_double(r.value_loss), format_double(r.entropy), format_double(r.approx_kl),
                     format_double(r.clip_fraction)});
    out += "\n";
  }
  return out;
}

std::vector<TrainLogRow> train_log_from_csv(const std::string& text) {
  const auto table = parse_csv(text);
  std::vector<TrainLogRow> rows;
  for (std::size_t i = 1; i < table.size(); ++i) {
    const auto& f = table[i];
    if (f.size() != 10) throw std::invalid_argument("training log row needs 10 fields");
    TrainLogRow r;
    r.update = std::stoi(f[0]);
    r.steps = std::stol(f[1]);
    r.episodes = std::stoi(f[2]);
    r.mean_return = std::stod(f[3]);
    r.mean_length = std::stod(f[4]);
    r.policy_loss = std::stod(f[5]);
    r.value_loss = std::stod(f[6]);
    r.entropy = std::stod(f[7]);
    r.approx_kl = std::stod(f[8]);
    r.clip_fraction = std::stod(f[9]);
    rows.push_back(r);
  }
  return rows;
}

TrainResult ppo_train(const PpoConfig& cfg, const ProblemSampler& sampler, int case_tag, std::uint64_t seed,
                      const std::function<void(const TrainLogRow&)>& on_update) {
  cfg.validate();
  const std::uint64_t episode_stream = derive_seed(seed, 2);
  Rng act_rng(derive_seed(seed, 3));
  Rng shuffle_rng(derive_seed(seed, 4));

  IgbdEnv env(cfg.env);
  TrainResult out;
  auto next_problem = [&] { return sampler(derive_seed(episode_stream, static_cast<std::uint64_t>(out.episodes++))); };
  env.reset(next_problem());
  out.policy = make_policy(env.state_dim(), cfg, case_tag, derive_seed(seed, 1));
  out.policy.seed = seed;
  auto& pol = out.policy;
  Adam actor_opt(pol.actor.num_params(), cfg.learning_rate);
  Adam critic_opt(pol.critic.num_params(), cfg.learning_rate);

  const int T = cfg.rollout_steps;
  const int updates = static_cast<int>((cfg.total_steps + T - 1) / T);
  std::deque<std::pair<double, int>> recent;  // (return, length) of the last 100 episodes
  double running_return = 0.0;
  int running_length = 0;

  for (int u = 0; u < updates; ++u) {
    std::vector<std::vector<double>> states(T);
    std::vector<int> actions(T);
    std::vector<double> logps(T), values(T), rewards(T), next_values(T);
    std::vector<char> terminal(T, 0), episode_end(T, 0);
    int finished = 0;
    for (int t = 0; t < T; ++t) {
      if (!env.active()) env.reset(next_problem());
      states[t] = env.state();
      const auto logits = pol.actor.forward(states[t]);
      const auto probs = softmax(logits);
      actions[t] = static_cast<int>(act_rng.categorical(probs));
      logps[t] = log_softmax(logits)[actions[t]];
      values[t] = value_of(pol, states[t]);
      const auto res = env.step(actions[t]);
      rewards[t] = res.reward;
      next_values[t] = value_of(pol, res.state);
      terminal[t] = res.done && !res.truncated;
      episode_end[t] = res.done || t + 1 == T;
      running_return += res.reward;
      ++running_length;
      if (res.done) {
        recent.emplace_back(running_return, running_length);
        if (recent.size() > 100) recent.pop_front();
        running_return = 0.0;
        running_length = 0;
        ++finished;
      }
    }
    out.steps += T;

    const auto adv = compute_gae(rewards, values, next_values, terminal, episode_end, cfg.gamma, cfg.gae_lambda);
    std::vector<double> returns(T);
    for (int t = 0; t < T; ++t) returns[t] = adv[t] + values[t];

    TrainLogRow row;
    row.update = u + 1;
    row.steps = out.steps;
    row.episodes = finished;
    int n_batches = 0;
    std::vector<int> order(T);
    for (int e = 0; e < cfg.epochs_per_update; ++e) {
      std::iota(order.begin(), order.end(), 0);
      shuffle_rng.shuffle(order);
      for (int start = 0; start < T; start += cfg.batch_size) {
        const int stop = std::min(T, start + cfg.batch_size);
        Minibatch mb;
        for (int q = start; q < stop; ++q) {
          const int t = order[q];
          mb.states.push_back(states[t]);
          mb.actions.push_back(actions[t]);
          mb.old_log_probs.push_back(logps[t]);
          mb.advantages.push_back(adv[t]);
          mb.returns.push_back(returns[t]);
        }
        if (cfg.normalize_advantage && mb.size() > 1) {
          const double mean = std::accumulate(mb.advantages.begin(), mb.advantages.end(), 0.0) / mb.size();
          double var = 0.0;
          for (double a : mb.advantages) var += (a - mean) * (a - mean);
          const double sd = std::sqrt(var / (mb.size() - 1));
          for (double& a : mb.advantages) a = (a - mean) / (sd + 1e-8);
        }
        std::vector<double> ga, gc;
        const auto L = ppo_loss(pol, mb, cfg, &ga, &gc);
        if (!std::isfinite(L.total)) throw std::runtime_error("PPO loss became non-finite at update " + std::to_string(u + 1));
        if (cfg.max_grad_norm > 0.0) {
          clip_norm(ga, cfg.max_grad_norm);
          clip_norm(gc, cfg.max_grad_norm);
        }
        actor_opt.step(pol.actor.params(), ga);
        critic_opt.step(pol.critic.params(), gc);
        row.policy_loss += L.policy_loss;
        row.value_loss += L.value_loss;
        row.entropy += L.entropy;
        row.approx_kl += L.approx_kl;
        row.clip_fraction += L.clip_fraction;
        ++n_batches;
      }
    }
    row.policy_loss /= n_batches;
    row.value_loss /= n_batches;
    row.entropy /= n_batches;
    row.approx_kl /= n_batches;
    row.clip_fraction /= n_batches;
    if (!recent.empty()) {
      for (const auto& [r, len] : recent) {
        row.mean_return += r;
        row.mean_length += len;
      }
      row.mean_return /= static_cast<double>(recent.size());
      row.mean_length /= static_cast<double>(recent.size());
    } else {
      row.mean_return = running_return;
      row.mean_length = running_length;
    }
    out.log.push_back(row);
    if (on_update) on_update(row);
  }
  return out;
}

double episode_return(const PolicyParams& p, std::unique_ptr<gbd::DecomposedProblem> problem, const EnvConfig& cfg,
                      ActMode mode, Rng& rng) {
  IgbdEnv env(cfg);
  env.reset(std::move(problem));
  double total = 0.0;
  while (env.active()) total += env.step(act(p, env.state(), mode, rng)).reward;
  return total;
}

double LearnedPolicy::choose(const gbd::IgbdSession& session, Rng& rng) {
  const auto state = make_state(session.problem().features(), session, tol_hi_);
  const int a = act(params_, state, ActMode::kDeterministic, rng);
  return gbd::map_action(gbd::action_value(a), session.gap(), tol_lo_, tol_hi_);
}

}  // namespace igbd::rl
