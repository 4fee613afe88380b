#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dagsched/adam.hpp"
#include "dagsched/gcn_policy.hpp"
#include "dagsched/sim_env.hpp"

namespace dagsched {

struct TrainConfig {
  double entropy_beta = 0.02;
  int t_max = 40;
  double gamma = 1.0;
  long total_steps = 10000;     // environment decision steps
  long eval_every = 250;        // greedy evaluation cadence, in steps
  double critic_lr_scale = 0.5; // applies to critic-only parameters
  int hidden = 64;
  std::uint64_t seed = 0;
  AdamConfig adam;              // lr 0.01, epsilon 0.1
};

struct TrajectoryStep {
  Observation obs;
  int slot = 0;  // chosen softmax slot, pass last
  double log_prob = 0.0;
  double entropy = 0.0;
  double reward = 0.0;
  double value = 0.0;
};

// Rollout segment of at most t_max sampled steps, cut short at terminal
// states. Rewards are zero everywhere except a terminal final step.
struct Trajectory {
  std::vector<TrajectoryStep> steps;
  bool terminal = false;
  double bootstrap_value = 0.0;  // V of the next state; 0 when terminal

  int length() const { return static_cast<int>(steps.size()); }
};

Trajectory collect_segment(SchedulingEnv &env, const PolicyParams &params, int t_max,
                           std::mt19937_64 &rng);

struct AdvantageResult {
  std::vector<double> advantages;  // n-step return minus the value estimate
  std::vector<double> returns;     // critic regression targets
};

AdvantageResult compute_advantages(const Trajectory &traj, double gamma);

struct UpdateStats {
  double loss_pi = 0.0;   // -sum_t log pi(a_t|s_t) * A_t
  double loss_v = 0.0;    // mean squared error of the value head
  double entropy = 0.0;   // mean policy entropy over the segment
};

// One optimizer step on the combined objective; advantages are constants in
// the policy gradient. Critic-only parameters move at critic_lr_scale.
// Throws std::runtime_error with diagnostics if a loss is not finite.
UpdateStats update_policy(PolicyParams &params, AdamOptimizer &optimizer, const Trajectory &traj,
                          const AdvantageResult &adv, const TrainConfig &config);

struct EvalResult {
  timecount_t makespan = 0;
  double mean_action_seconds = 0.0;
  std::vector<DecisionRecord> decisions;
  std::vector<TaskInterval> intervals;
};

// One greedy-mode episode on a fresh environment.
EvalResult evaluate_greedy(const SchedulingEnv &reference_env, const PolicyParams &params);
EvalResult evaluate_greedy(std::shared_ptr<const TaskGraph> graph, const EnvConfig &config,
                           const PolicyParams &params);

struct TrainResult {
  std::uint64_t seed = 0;
  timecount_t best_makespan = 0;
  PolicyParams best_params;
  std::string log_csv;
};

// Full training loop: collect/update for total_steps environment steps,
// greedy evaluation every eval_every steps, best checkpoint retained.
// config.baseline_makespan must hold the instance's reference makespan.
TrainResult train(std::shared_ptr<const TaskGraph> graph, const EnvConfig &env_config,
                  const TrainConfig &train_config);

// Independent seeded runs (seed = base_config.seed + i), optionally across
// worker threads; results come back ordered by seed.
std::vector<TrainResult> train_seeds(std::shared_ptr<const TaskGraph> graph,
                                     const EnvConfig &env_config, const TrainConfig &base_config,
                                     int seed_count, int threads);

// Shortest text that parses back to exactly the same double.
std::string format_double(double value);

}  // namespace dagsched
