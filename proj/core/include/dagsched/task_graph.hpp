#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace dagsched {

using timecount_t = std::int64_t;

// Kernel kinds of the tiled Cholesky factorization, plus the bookkeeping sink.
enum class TaskKind : std::uint8_t {
  Potrf = 0,
  Trsm = 1,
  Syrk = 2,
  Gemm = 3,
  VirtualSink = 4,
};

constexpr int kKernelKindCount = 4;

timecount_t kind_duration(TaskKind kind);
const char *kind_name(TaskKind kind);

struct TaskNode {
  int id = -1;
  TaskKind kind = TaskKind::VirtualSink;
  std::array<int, 3> indices{};  // POTRF(k) / TRSM(k,m) / SYRK(k,n) / GEMM(k,n,m)
  int index_count = 0;
  timecount_t duration = 0;

  // "POTRF(0)", "GEMM(0,1,2)", "SINK"
  std::string label() const;
};

// Immutable task DAG of a tiled Cholesky factorization on T x T tiles.
// Node ids follow the k-major loop order of the factorization, which is a
// topological order; the last id is a zero-duration virtual sink succeeding
// every task that would otherwise have no successor.
class TaskGraph {
public:
  int tiles() const { return tiles_; }
  int node_count() const { return static_cast<int>(nodes_.size()); }
  int real_task_count() const { return node_count() - 1; }
  int source_id() const { return 0; }
  int sink_id() const { return node_count() - 1; }

  const TaskNode &node(int id) const { return nodes_[id]; }
  const std::vector<TaskNode> &nodes() const { return nodes_; }
  const std::vector<int> &successors(int id) const { return successors_[id]; }
  const std::vector<int> &predecessors(int id) const { return predecessors_[id]; }
  const std::vector<std::pair<int, int>> &edges() const { return edges_; }

  int successor_count(int id) const { return static_cast<int>(successors_[id].size()); }
  int predecessor_count(int id) const { return static_cast<int>(predecessors_[id].size()); }

  timecount_t duration(int id) const { return nodes_[id].duration; }
  timecount_t cp_to_sink(int id) const { return cp_to_sink_[id]; }
  const std::vector<timecount_t> &cp_to_sink() const { return cp_to_sink_; }

  timecount_t total_work() const { return total_work_; }
  timecount_t critical_path() const { return critical_path_; }

  // max(CP, W/p): valid lower bound on the makespan of any schedule.
  double makespan_lower_bound(int processors) const;

private:
  friend TaskGraph generate_cholesky_dag(int tiles);

  int tiles_ = 0;
  std::vector<TaskNode> nodes_;
  std::vector<std::vector<int>> successors_;
  std::vector<std::vector<int>> predecessors_;
  std::vector<std::pair<int, int>> edges_;
  std::vector<timecount_t> cp_to_sink_;
  timecount_t total_work_ = 0;
  timecount_t critical_path_ = 0;
};

// Builds the DAG for `tiles` >= 1; throws std::invalid_argument otherwise.
TaskGraph generate_cholesky_dag(int tiles);

// Kahn topological order over an adjacency list; throws std::invalid_argument
// if the graph contains a cycle.
std::vector<int> topological_order(const std::vector<std::vector<int>> &successors);

// cp(v) = duration(v) + max over successors of cp, by reverse topological
// sweep. Throws on cyclic input.
std::vector<timecount_t> compute_cp_to_sink(const std::vector<timecount_t> &durations,
                                            const std::vector<std::vector<int>> &successors);
std::vector<timecount_t> compute_cp_to_sink(const TaskGraph &graph);

// Graphviz text with one node per task, labelled by kernel and loop indices.
std::string export_dot(const TaskGraph &graph);

// JSON document: tiles, nodes[{id,kind,indices,duration,cp}], edges[[src,dst]],
// total_work, critical_path.
std::string export_json(const TaskGraph &graph);

}  // namespace dagsched
