#include "dagsched/baselines.hpp"

#include <memory>
#include <random>

namespace dagsched {

ScheduleResult run_list_policy(const TaskGraph &graph, int processors,
                               const std::function<int(const SchedulingEnv &)> &choose) {
  EnvConfig config;
  config.tiles = graph.tiles();
  config.processors = processors;
  config.window = 0;
  config.baseline_makespan = 1;  // reward unused here
  // Non-owning alias; the env does not outlive this call.
  std::shared_ptr<const TaskGraph> alias(&graph, [](const TaskGraph *) {});
  SchedulingEnv env(std::move(alias), config);

  bool finished = env.done();
  while (!finished) {
    if (!env.available_tasks().empty() && env.free_processor_count() > 0) {
      finished = env.apply_action(Action::select(choose(env))).second;
    } else {
      finished = env.apply_action(Action::pass()).second;
    }
  }
  return ScheduleResult{env.makespan(), env.intervals(), env.decisions()};
}

ScheduleResult asap_schedule(const TaskGraph &graph, int processors) {
  return run_list_policy(graph, processors, [&](const SchedulingEnv &env) {
    const auto &avail = env.available_tasks();
    int best = 0;
    for (int i = 1; i < static_cast<int>(avail.size()); ++i) {
      if (graph.cp_to_sink(avail[i]) > graph.cp_to_sink(avail[best])) {
        best = i;
      }
    }
    return best;  // ids ascend, so the first max is the lowest id
  });
}

ScheduleResult greedy_schedule(const TaskGraph &graph, int processors) {
  return run_list_policy(graph, processors, [&](const SchedulingEnv &env) {
    const auto &avail = env.available_tasks();
    int best = 0;
    for (int i = 1; i < static_cast<int>(avail.size()); ++i) {
      if (graph.successor_count(avail[i]) > graph.successor_count(avail[best])) {
        best = i;
      }
    }
    return best;
  });
}

ScheduleResult random_schedule(const TaskGraph &graph, int processors, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return run_list_policy(graph, processors, [&rng](const SchedulingEnv &env) {
    const auto count = env.available_tasks().size();
    return static_cast<int>(rng() % count);
  });
}

}  // namespace dagsched
