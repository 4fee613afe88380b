#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "dagsched/sim_env.hpp"
#include "dagsched/task_graph.hpp"

namespace dagsched {

struct ScheduleResult {
  timecount_t makespan = 0;
  std::vector<TaskInterval> intervals;
  std::vector<DecisionRecord> decisions;
};

// Work-conserving list scheduling on the simulator: whenever a processor is
// free and tasks are available, start the task the chooser picks; otherwise
// wait for the next completion. The chooser returns a slot into the env's
// available list.
ScheduleResult run_list_policy(const TaskGraph &graph, int processors,
                               const std::function<int(const SchedulingEnv &)> &choose);

// Priority = longest remaining critical path, ties to the lowest node id.
ScheduleResult asap_schedule(const TaskGraph &graph, int processors);

// Priority = direct successor count, ties to the lowest node id.
ScheduleResult greedy_schedule(const TaskGraph &graph, int processors);

// Uniform choice among available tasks.
ScheduleResult random_schedule(const TaskGraph &graph, int processors, std::uint64_t seed);

}  // namespace dagsched
