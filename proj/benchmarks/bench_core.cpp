#include <benchmark/benchmark.h>

#include <memory>
#include <random>

#include "dagsched/a2c.hpp"
#include "dagsched/baselines.hpp"

using namespace dagsched;

static void BM_GenerateDag(benchmark::State &state) {
  const int tiles = static_cast<int>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(generate_cholesky_dag(tiles));
  }
}
BENCHMARK(BM_GenerateDag)->Arg(4)->Arg(8)->Arg(16)->Arg(32);

static void BM_CpToSink(benchmark::State &state) {
  TaskGraph g = generate_cholesky_dag(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(compute_cp_to_sink(g));
  }
}
BENCHMARK(BM_CpToSink)->Arg(8)->Arg(16)->Arg(32);

static void BM_AsapSchedule(benchmark::State &state) {
  TaskGraph g = generate_cholesky_dag(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(asap_schedule(g, 4).makespan);
  }
}
BENCHMARK(BM_AsapSchedule)->Arg(8)->Arg(16)->Arg(32);

namespace {

// env advanced to the middle of an episode, where observations are widest
SchedulingEnv mid_episode_env(int tiles, int window) {
  EnvConfig cfg;
  cfg.tiles = tiles;
  cfg.processors = 4;
  cfg.window = window;
  SchedulingEnv env = make_env(cfg);
  std::mt19937_64 rng(0);
  const int decisions = tiles * tiles / 2;
  for (int i = 0; i < decisions && !env.done(); ++i) {
    const auto &avail = env.available_tasks();
    if (!avail.empty() && env.free_processor_count() > 0) {
      env.apply_action(Action::select(static_cast<int>(rng() % avail.size())));
    } else {
      env.apply_action(Action::pass());
    }
  }
  return env;
}

}  // namespace

static void BM_ExtractObservation(benchmark::State &state) {
  const int tiles = static_cast<int>(state.range(0));
  const int window = static_cast<int>(state.range(1));
  SchedulingEnv env = mid_episode_env(tiles, window);
  for (auto _ : state) {
    benchmark::DoNotOptimize(env.extract_observation(window));
  }
}
BENCHMARK(BM_ExtractObservation)->Args({8, 0})->Args({8, 1})->Args({8, 4})->Args({16, 1});

// inference cost of one action for several window sizes and DAG sizes
static void BM_PolicyAction(benchmark::State &state) {
  const int tiles = static_cast<int>(state.range(0));
  const int window = static_cast<int>(state.range(1));
  SchedulingEnv env = mid_episode_env(tiles, window);
  Observation obs = env.observation();
  std::mt19937_64 rng(1);
  PolicyParams params = make_policy_params(window, 64, rng);
  for (auto _ : state) {
    PolicyOutput out = evaluate_policy(obs, params);
    benchmark::DoNotOptimize(act(out, ActMode::Greedy, nullptr));
  }
}
BENCHMARK(BM_PolicyAction)
    ->Args({4, 0})
    ->Args({4, 1})
    ->Args({8, 0})
    ->Args({8, 1})
    ->Args({8, 2})
    ->Args({8, 4})
    ->Args({16, 1});

static void BM_TrainingSegment(benchmark::State &state) {
  auto graph = std::make_shared<const TaskGraph>(generate_cholesky_dag(8));
  EnvConfig cfg;
  cfg.tiles = 8;
  cfg.processors = 4;
  cfg.window = 1;
  cfg.baseline_makespan = 160;
  SchedulingEnv env(graph, cfg);
  std::mt19937_64 rng(2);
  PolicyParams params = make_policy_params(1, 64, rng);
  TrainConfig train_cfg;
  AdamOptimizer opt(train_cfg.adam);
  for (auto _ : state) {
    Trajectory traj = collect_segment(env, params, train_cfg.t_max, rng);
    AdvantageResult adv = compute_advantages(traj, train_cfg.gamma);
    benchmark::DoNotOptimize(update_policy(params, opt, traj, adv, train_cfg));
    if (traj.terminal) {
      env.reset();
    }
  }
}
BENCHMARK(BM_TrainingSegment);

BENCHMARK_MAIN();
