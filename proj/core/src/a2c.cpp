#include "dagsched/a2c.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace dagsched {

std::string format_double(double value) {
  char buf[64];
  for (int precision = 15; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof(buf), "%.*g", precision, value);
    if (std::strtod(buf, nullptr) == value) {
      break;
    }
  }
  return buf;
}

Trajectory collect_segment(SchedulingEnv &env, const PolicyParams &params, int t_max,
                           std::mt19937_64 &rng) {
  Trajectory traj;
  traj.steps.reserve(t_max);
  for (int t = 0; t < t_max; ++t) {
    TrajectoryStep step;
    step.obs = env.observation();
    PolicyOutput out = evaluate_policy(step.obs, params);
    step.slot = act(out, ActMode::Sample, &rng);
    step.value = out.value;
    step.entropy = out.entropy;
    step.log_prob = std::log(out.probs[step.slot]);
    auto [reward, done] = env.apply_action(slot_to_action(step.obs, step.slot));
    step.reward = reward;
    traj.steps.push_back(std::move(step));
    if (done) {
      traj.terminal = true;
      break;
    }
  }
  traj.bootstrap_value =
      traj.terminal ? 0.0 : evaluate_policy(env.observation(), params).value;
  return traj;
}

AdvantageResult compute_advantages(const Trajectory &traj, double gamma) {
  AdvantageResult result;
  const int n = traj.length();
  result.advantages.resize(n);
  result.returns.resize(n);
  double running = traj.bootstrap_value;
  for (int t = n - 1; t >= 0; --t) {
    running = traj.steps[t].reward + gamma * running;
    result.returns[t] = running;
    result.advantages[t] = running - traj.steps[t].value;
  }
  return result;
}

UpdateStats update_policy(PolicyParams &params, AdamOptimizer &optimizer, const Trajectory &traj,
                          const AdvantageResult &adv, const TrainConfig &config) {
  const int n = traj.length();
  if (n == 0) {
    throw std::invalid_argument("update_policy: empty trajectory");
  }

  Tape tape;
  PolicyVars vars = make_policy_vars(tape, params);

  Var actor_loss = tape.leaf(Matrix::zeros(1, 1));
  Var critic_sq = tape.leaf(Matrix::zeros(1, 1));
  double entropy_sum = 0.0;
  double loss_pi_value = 0.0;
  for (int t = 0; t < n; ++t) {
    const TrajectoryStep &step = traj.steps[t];
    PolicyForward fwd = policy_forward(tape, step.obs, vars);
    Var log_prob = tape.log(tape.gather_entry(fwd.probs, 0, step.slot));
    // actor term: -(log pi * A + beta * H), advantage held constant
    Var term = tape.add(tape.scale(log_prob, adv.advantages[t]),
                        tape.scale(fwd.entropy, config.entropy_beta));
    actor_loss = tape.sub(actor_loss, term);
    Var target = tape.leaf(Matrix::filled(1, 1, adv.returns[t]));
    Var err = tape.sub(fwd.value, target);
    critic_sq = tape.add(critic_sq, tape.mul(err, err));
    entropy_sum += tape.value(fwd.entropy).scalar();
    loss_pi_value -= tape.value(log_prob).scalar() * adv.advantages[t];
  }
  Var critic_loss = tape.scale(critic_sq, 1.0 / n);
  Var total = tape.add(actor_loss, critic_loss);

  UpdateStats stats;
  stats.loss_pi = loss_pi_value;
  stats.loss_v = tape.value(critic_loss).scalar();
  stats.entropy = entropy_sum / n;
  if (!std::isfinite(tape.value(total).scalar())) {
    std::ostringstream msg;
    msg << "update_policy: non-finite loss (actor=" << tape.value(actor_loss).scalar()
        << ", critic=" << stats.loss_v << ", steps=" << n << ")";
    throw std::runtime_error(msg.str());
  }

  tape.backward(total);

  optimizer.begin_step();
  for (int l = 0; l < params.layer_count(); ++l) {
    optimizer.update("gcn." + std::to_string(l), params.gcn[l], tape.grad(vars.gcn[l]));
  }
  optimizer.update("node_head", params.node_head, tape.grad(vars.node_head));
  optimizer.update("pass_head", params.pass_head, tape.grad(vars.pass_head));
  optimizer.update("value_head", params.value_head, tape.grad(vars.value_head),
                   config.critic_lr_scale);
  return stats;
}

EvalResult evaluate_greedy(std::shared_ptr<const TaskGraph> graph, const EnvConfig &config,
                           const PolicyParams &params) {
  SchedulingEnv env(std::move(graph), config);
  EvalResult result;
  long actions = 0;
  double seconds = 0.0;
  bool done = env.done();
  while (!done) {
    Observation obs = env.observation();
    const auto start = std::chrono::steady_clock::now();
    PolicyOutput out = evaluate_policy(obs, params);
    const int slot = act(out, ActMode::Greedy, nullptr);
    seconds += std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    ++actions;
    done = env.apply_action(slot_to_action(obs, slot)).second;
  }
  result.makespan = env.makespan();
  result.mean_action_seconds = actions > 0 ? seconds / static_cast<double>(actions) : 0.0;
  result.decisions = env.decisions();
  result.intervals = env.intervals();
  return result;
}

EvalResult evaluate_greedy(const SchedulingEnv &reference_env, const PolicyParams &params) {
  auto graph = std::make_shared<const TaskGraph>(reference_env.graph());
  return evaluate_greedy(std::move(graph), reference_env.config(), params);
}

TrainResult train(std::shared_ptr<const TaskGraph> graph, const EnvConfig &env_config,
                  const TrainConfig &train_config) {
  std::mt19937_64 rng(train_config.seed);
  PolicyParams params = make_policy_params(env_config.window, train_config.hidden, rng,
                                           env_config.cp_feature);
  AdamOptimizer optimizer(train_config.adam);
  SchedulingEnv env(graph, env_config);

  std::ostringstream log;
  log << "# dagsched train log v1\n";
  log << "# tiles=" << env_config.tiles << " procs=" << env_config.processors
      << " window=" << env_config.window << " cp_feature=" << (env_config.cp_feature ? 1 : 0)
      << " baseline=" << env_config.baseline_makespan << " steps=" << train_config.total_steps
      << " t_max=" << train_config.t_max << " gamma=" << format_double(train_config.gamma)
      << " beta=" << format_double(train_config.entropy_beta)
      << " lr=" << format_double(train_config.adam.lr)
      << " critic_lr_scale=" << format_double(train_config.critic_lr_scale)
      << " eval_every=" << train_config.eval_every << " hidden=" << train_config.hidden
      << " seed=" << train_config.seed << "\n";
  log << "step,loss_pi,loss_v,entropy,eval_makespan,best_makespan\n";

  TrainResult result;
  result.seed = train_config.seed;
  EvalResult initial = evaluate_greedy(graph, env_config, params);
  result.best_makespan = initial.makespan;
  result.best_params = params;
  log << "0,,,," << initial.makespan << ',' << result.best_makespan << "\n";

  long steps_done = 0;
  long next_eval = train_config.eval_every > 0 ? train_config.eval_every : -1;
  env.reset();
  while (steps_done < train_config.total_steps) {
    const int remaining = static_cast<int>(
        std::min<long>(train_config.t_max, train_config.total_steps - steps_done));
    Trajectory traj = collect_segment(env, params, remaining, rng);
    AdvantageResult adv = compute_advantages(traj, train_config.gamma);
    UpdateStats stats = update_policy(params, optimizer, traj, adv, train_config);
    steps_done += traj.length();
    if (traj.terminal) {
      env.reset();
    }

    bool evaluated = false;
    timecount_t eval_makespan = 0;
    while (next_eval > 0 && steps_done >= next_eval) {
      EvalResult eval = evaluate_greedy(graph, env_config, params);
      eval_makespan = eval.makespan;
      evaluated = true;
      if (eval.makespan < result.best_makespan) {
        result.best_makespan = eval.makespan;
        result.best_params = params;
      }
      next_eval += train_config.eval_every;
    }

    log << steps_done << ',' << format_double(stats.loss_pi) << ','
        << format_double(stats.loss_v) << ',' << format_double(stats.entropy) << ',';
    if (evaluated) {
      log << eval_makespan;
    }
    log << ',' << result.best_makespan << "\n";
  }

  result.log_csv = log.str();
  return result;
}

std::vector<TrainResult> train_seeds(std::shared_ptr<const TaskGraph> graph,
                                     const EnvConfig &env_config, const TrainConfig &base_config,
                                     int seed_count, int threads) {
  if (seed_count < 1) {
    throw std::invalid_argument("train_seeds: seed_count must be >= 1");
  }
  threads = std::max(1, std::min(threads, seed_count));
  std::vector<TrainResult> results(seed_count);
  std::atomic<int> next{0};
  auto worker = [&]() {
    for (int i = next.fetch_add(1); i < seed_count; i = next.fetch_add(1)) {
      EnvConfig env_cfg = env_config;
      TrainConfig cfg = base_config;
      cfg.seed = base_config.seed + static_cast<std::uint64_t>(i);
      env_cfg.seed = cfg.seed;
      results[i] = train(graph, env_cfg, cfg);
    }
  };
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int i = 0; i < threads; ++i) {
      pool.emplace_back(worker);
    }
    for (auto &t : pool) {
      t.join();
    }
  }
  return results;
}

}  // namespace dagsched
