#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "dagsched/task_graph.hpp"

namespace dagsched {

constexpr int kFeatureDim = 9;  // [succ, pred, onehot4(kind), avail, run, cp]

struct EnvConfig {
  int tiles = 4;
  int processors = 4;
  int window = 1;
  timecount_t baseline_makespan = 1;  // reference makespan for the terminal reward
  std::uint64_t seed = 0;
  bool cp_feature = true;      // when false the cp column is zeroed
  double duration_noise = 0.0; // multiplicative half-width in [0,1), 0 = deterministic
};

// Window-w sub-DAG around the running/available frontier, ready for message
// passing: edges are symmetrized and carry self-loops, indices are local rows.
struct Observation {
  std::vector<int> node_ids;               // ascending task ids
  std::vector<double> features;            // node_count() x kFeatureDim, row-major
  std::vector<std::pair<int, int>> edges;  // local (src,dst), symmetric closure + self-loops
  std::vector<int> action_tasks;           // available task ids, ascending
  std::vector<int> action_rows;            // feature row of each action task
  bool pass_allowed = false;

  int node_count() const { return static_cast<int>(node_ids.size()); }
  // slots 0..k-1 select action_tasks[slot]; slot k is pass
  int action_count() const { return static_cast<int>(action_tasks.size()) + 1; }
  int pass_slot() const { return static_cast<int>(action_tasks.size()); }
  const double *feature_row(int row) const { return features.data() + row * kFeatureDim; }
};

struct Action {
  static constexpr int kPass = -1;
  int slot = kPass;  // index into the observation's action_tasks

  static Action select(int slot) { return Action{slot}; }
  static Action pass() { return Action{kPass}; }
  bool is_pass() const { return slot == kPass; }
};

enum class TaskPhase : std::uint8_t { Pending, Available, Running, Done };

struct ProcessorSlot {
  int task = -1;
  timecount_t finish = 0;
  bool busy() const { return task >= 0; }
};

struct ClusterState {
  timecount_t clock = 0;
  std::vector<ProcessorSlot> processors;
  std::vector<TaskPhase> phase;      // per node; the sink stays Pending
  std::vector<int> available;        // ascending task ids
  std::vector<int> missing_preds;    // unfinished predecessor countdown
  int running_count = 0;
  int done_count = 0;
};

struct TaskInterval {
  int task = -1;
  int processor = -1;
  timecount_t start = 0;
  timecount_t finish = 0;
};

struct DecisionRecord {
  timecount_t clock = 0;
  bool pass = false;
  int task = -1;       // -1 on pass
  int processor = -1;  // -1 on pass
  std::vector<int> available;  // choices at decision time
};

// Event-driven simulator of p identical processors executing a TaskGraph,
// driven one action at a time. Selecting a task starts it immediately on the
// lowest-index free processor; the clock advances to the next task completion
// whenever no further decision is possible at the current instant, or on pass.
// The terminal reward is (baseline - makespan) / baseline; all other rewards
// are zero.
class SchedulingEnv {
public:
  SchedulingEnv(std::shared_ptr<const TaskGraph> graph, EnvConfig config);

  struct StepResult {
    Observation obs;
    double reward = 0.0;
    bool done = false;
  };

  Observation reset();
  StepResult step(const Action &action);

  // State transition without building the next observation; used by the
  // baseline schedulers and anything else that does not need features.
  std::pair<double, bool> apply_action(const Action &action);

  Observation observation() const { return extract_observation(config_.window); }
  Observation extract_observation(int window) const;

  bool done() const;
  timecount_t clock() const { return state_.clock; }
  timecount_t makespan() const;  // throws before termination

  const std::vector<int> &available_tasks() const { return state_.available; }
  bool pass_allowed() const { return state_.running_count > 0; }
  int free_processor_count() const;
  TaskPhase phase(int task) const { return state_.phase[task]; }

  const TaskGraph &graph() const { return *graph_; }
  const EnvConfig &config() const { return config_; }
  const ClusterState &cluster() const { return state_; }
  const std::vector<TaskInterval> &intervals() const { return intervals_; }
  const std::vector<DecisionRecord> &decisions() const { return decisions_; }

  // JSON episode trace: per-decision records plus final per-task intervals.
  std::string trace_json() const;

  static double terminal_reward(timecount_t baseline, timecount_t makespan);

  static std::string trace_to_json(const TaskGraph &graph, int processors, bool done,
                                   timecount_t makespan,
                                   const std::vector<DecisionRecord> &decisions,
                                   const std::vector<TaskInterval> &intervals);

private:
  void advance_to_next_event();
  timecount_t effective_duration(int task);

  std::shared_ptr<const TaskGraph> graph_;
  EnvConfig config_;
  ClusterState state_;
  std::vector<TaskInterval> intervals_;
  std::vector<DecisionRecord> decisions_;
  std::mt19937_64 rng_;
};

// Convenience constructor generating the instance DAG from config.tiles.
SchedulingEnv make_env(const EnvConfig &config);

}  // namespace dagsched
