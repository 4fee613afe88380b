#include "dagsched/sim_env.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace dagsched {

SchedulingEnv::SchedulingEnv(std::shared_ptr<const TaskGraph> graph, EnvConfig config)
    : graph_(std::move(graph)), config_(config) {
  if (!graph_) {
    throw std::invalid_argument("SchedulingEnv: null graph");
  }
  if (config_.processors < 1) {
    throw std::invalid_argument("SchedulingEnv: processors must be >= 1");
  }
  if (config_.window < 0) {
    throw std::invalid_argument("SchedulingEnv: window must be >= 0");
  }
  if (config_.baseline_makespan <= 0) {
    throw std::invalid_argument("SchedulingEnv: baseline_makespan must be > 0");
  }
  if (config_.duration_noise < 0.0 || config_.duration_noise >= 1.0) {
    throw std::invalid_argument("SchedulingEnv: duration_noise must lie in [0,1)");
  }
  reset();
}

Observation SchedulingEnv::reset() {
  const int n = graph_->node_count();
  state_.clock = 0;
  state_.processors.assign(config_.processors, ProcessorSlot{});
  state_.phase.assign(n, TaskPhase::Pending);
  state_.available.clear();
  state_.missing_preds.resize(n);
  for (int v = 0; v < n; ++v) {
    state_.missing_preds[v] = graph_->predecessor_count(v);
  }
  state_.running_count = 0;
  state_.done_count = 0;
  state_.phase[graph_->source_id()] = TaskPhase::Available;
  state_.available.push_back(graph_->source_id());
  intervals_.clear();
  decisions_.clear();
  rng_.seed(config_.seed);
  return observation();
}

bool SchedulingEnv::done() const {
  return state_.done_count == graph_->real_task_count();
}

timecount_t SchedulingEnv::makespan() const {
  if (!done()) {
    throw std::logic_error("makespan: episode has not terminated");
  }
  return state_.clock;
}

int SchedulingEnv::free_processor_count() const {
  return config_.processors - state_.running_count;
}

double SchedulingEnv::terminal_reward(timecount_t baseline, timecount_t makespan) {
  return static_cast<double>(baseline - makespan) / static_cast<double>(baseline);
}

timecount_t SchedulingEnv::effective_duration(int task) {
  const timecount_t base = graph_->duration(task);
  if (config_.duration_noise == 0.0) {
    return base;
  }
  const double u = static_cast<double>(rng_() >> 11) * 0x1.0p-53;  // uniform [0,1)
  const double factor = 1.0 + config_.duration_noise * (2.0 * u - 1.0);
  return std::max<timecount_t>(1, std::llround(static_cast<double>(base) * factor));
}

std::pair<double, bool> SchedulingEnv::apply_action(const Action &action) {
  if (done()) {
    throw std::logic_error("apply_action: episode already terminated");
  }

  DecisionRecord record;
  record.clock = state_.clock;
  record.available = state_.available;

  if (action.is_pass()) {
    if (!pass_allowed()) {
      throw std::invalid_argument("apply_action: pass is illegal while all processors are idle");
    }
    record.pass = true;
    decisions_.push_back(std::move(record));
    advance_to_next_event();
  } else {
    if (action.slot < 0 || action.slot >= static_cast<int>(state_.available.size())) {
      throw std::invalid_argument("apply_action: action slot out of range");
    }
    int proc = -1;
    for (int i = 0; i < config_.processors; ++i) {
      if (!state_.processors[i].busy()) {
        proc = i;
        break;
      }
    }
    if (proc < 0) {
      throw std::invalid_argument("apply_action: no free processor");
    }
    const int task = state_.available[action.slot];
    state_.available.erase(state_.available.begin() + action.slot);
    state_.phase[task] = TaskPhase::Running;
    ++state_.running_count;
    const timecount_t finish = state_.clock + effective_duration(task);
    state_.processors[proc] = ProcessorSlot{task, finish};
    intervals_.push_back(TaskInterval{task, proc, state_.clock, finish});

    record.task = task;
    record.processor = proc;
    decisions_.push_back(std::move(record));

    // Stay at the current instant while another decision is possible.
    if (!(free_processor_count() > 0 && !state_.available.empty())) {
      advance_to_next_event();
    }
  }

  const bool finished = done();
  const double reward =
      finished ? terminal_reward(config_.baseline_makespan, state_.clock) : 0.0;
  return {reward, finished};
}

void SchedulingEnv::advance_to_next_event() {
  timecount_t next = std::numeric_limits<timecount_t>::max();
  for (const auto &slot : state_.processors) {
    if (slot.busy()) {
      next = std::min(next, slot.finish);
    }
  }
  state_.clock = next;
  const int sink = graph_->sink_id();
  for (auto &slot : state_.processors) {
    if (!slot.busy() || slot.finish != next) {
      continue;
    }
    const int task = slot.task;
    slot = ProcessorSlot{};
    state_.phase[task] = TaskPhase::Done;
    --state_.running_count;
    ++state_.done_count;
    for (int succ : graph_->successors(task)) {
      if (--state_.missing_preds[succ] == 0 && succ != sink) {
        state_.phase[succ] = TaskPhase::Available;
        auto pos = std::lower_bound(state_.available.begin(), state_.available.end(), succ);
        state_.available.insert(pos, succ);
      }
    }
  }
}

SchedulingEnv::StepResult SchedulingEnv::step(const Action &action) {
  auto [reward, finished] = apply_action(action);
  return StepResult{observation(), reward, finished};
}

Observation SchedulingEnv::extract_observation(int window) const {
  const int n = graph_->node_count();
  const int sink = graph_->sink_id();

  // BFS over successor edges from running + available, sink excluded.
  std::vector<int> depth(n, -1);
  std::vector<int> frontier;
  for (int v = 0; v < n; ++v) {
    if (state_.phase[v] == TaskPhase::Running || state_.phase[v] == TaskPhase::Available) {
      depth[v] = 0;
      frontier.push_back(v);
    }
  }
  for (int d = 0; d < window && !frontier.empty(); ++d) {
    std::vector<int> next;
    for (int u : frontier) {
      for (int v : graph_->successors(u)) {
        if (v != sink && depth[v] < 0) {
          depth[v] = d + 1;
          next.push_back(v);
        }
      }
    }
    frontier = std::move(next);
  }

  Observation obs;
  std::vector<int> local(n, -1);
  for (int v = 0; v < n; ++v) {
    if (depth[v] >= 0) {
      local[v] = obs.node_count();
      obs.node_ids.push_back(v);
    }
  }

  const double cp_norm = static_cast<double>(graph_->critical_path());
  obs.features.assign(static_cast<std::size_t>(obs.node_count()) * kFeatureDim, 0.0);
  for (int row = 0; row < obs.node_count(); ++row) {
    const int v = obs.node_ids[row];
    double *f = obs.features.data() + row * kFeatureDim;
    f[0] = static_cast<double>(graph_->successor_count(v));
    f[1] = static_cast<double>(graph_->predecessor_count(v));
    f[2 + static_cast<int>(graph_->node(v).kind)] = 1.0;
    f[6] = state_.phase[v] == TaskPhase::Available ? 1.0 : 0.0;
    f[7] = state_.phase[v] == TaskPhase::Running ? 1.0 : 0.0;
    f[8] = config_.cp_feature ? static_cast<double>(graph_->cp_to_sink(v)) / cp_norm : 0.0;
  }

  for (int row = 0; row < obs.node_count(); ++row) {
    const int u = obs.node_ids[row];
    for (int v : graph_->successors(u)) {
      if (local[v] >= 0) {
        obs.edges.emplace_back(row, local[v]);
        obs.edges.emplace_back(local[v], row);
      }
    }
    obs.edges.emplace_back(row, row);
  }
  std::sort(obs.edges.begin(), obs.edges.end());
  obs.edges.erase(std::unique(obs.edges.begin(), obs.edges.end()), obs.edges.end());

  obs.action_tasks = state_.available;
  obs.action_rows.reserve(obs.action_tasks.size());
  for (int task : obs.action_tasks) {
    obs.action_rows.push_back(local[task]);
  }
  obs.pass_allowed = pass_allowed();
  return obs;
}

std::string SchedulingEnv::trace_to_json(const TaskGraph &graph, int processors, bool done,
                                         timecount_t makespan,
                                         const std::vector<DecisionRecord> &decisions,
                                         const std::vector<TaskInterval> &intervals) {
  nlohmann::ordered_json doc;
  doc["tiles"] = graph.tiles();
  doc["processors"] = processors;
  doc["done"] = done;
  if (done) {
    doc["makespan"] = makespan;
  }
  doc["decisions"] = nlohmann::ordered_json::array();
  for (const auto &d : decisions) {
    nlohmann::ordered_json j;
    j["clock"] = d.clock;
    j["action"] = d.pass ? "pass" : "select";
    if (!d.pass) {
      j["task"] = d.task;
      j["processor"] = d.processor;
    }
    j["available"] = d.available;
    doc["decisions"].push_back(std::move(j));
  }
  doc["tasks"] = nlohmann::ordered_json::array();
  for (const auto &iv : intervals) {
    doc["tasks"].push_back({{"id", iv.task},
                            {"processor", iv.processor},
                            {"start", iv.start},
                            {"finish", iv.finish}});
  }
  return doc.dump(2);
}

std::string SchedulingEnv::trace_json() const {
  return trace_to_json(*graph_, config_.processors, done(), state_.clock, decisions_,
                       intervals_);
}

SchedulingEnv make_env(const EnvConfig &config) {
  auto graph = std::make_shared<const TaskGraph>(generate_cholesky_dag(config.tiles));
  return SchedulingEnv(std::move(graph), config);
}

}  // namespace dagsched
