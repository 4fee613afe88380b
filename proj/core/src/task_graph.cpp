#include "dagsched/task_graph.hpp"

#include <algorithm>
#include <map>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace dagsched {

timecount_t kind_duration(TaskKind kind) {
  switch (kind) {
  case TaskKind::Potrf:
    return 11;
  case TaskKind::Trsm:
    return 8;
  case TaskKind::Syrk:
    return 2;
  case TaskKind::Gemm:
    return 3;
  case TaskKind::VirtualSink:
    return 0;
  }
  return 0;
}

const char *kind_name(TaskKind kind) {
  switch (kind) {
  case TaskKind::Potrf:
    return "POTRF";
  case TaskKind::Trsm:
    return "TRSM";
  case TaskKind::Syrk:
    return "SYRK";
  case TaskKind::Gemm:
    return "GEMM";
  case TaskKind::VirtualSink:
    return "SINK";
  }
  return "?";
}

std::string TaskNode::label() const {
  if (kind == TaskKind::VirtualSink) {
    return "SINK";
  }
  std::string out = kind_name(kind);
  out += '(';
  for (int i = 0; i < index_count; ++i) {
    if (i > 0) {
      out += ',';
    }
    out += std::to_string(indices[i]);
  }
  out += ')';
  return out;
}

double TaskGraph::makespan_lower_bound(int processors) const {
  if (processors < 1) {
    throw std::invalid_argument("makespan_lower_bound: processors must be >= 1");
  }
  double work_bound = static_cast<double>(total_work_) / static_cast<double>(processors);
  return std::max(static_cast<double>(critical_path_), work_bound);
}

std::vector<int> topological_order(const std::vector<std::vector<int>> &successors) {
  const int n = static_cast<int>(successors.size());
  std::vector<int> in_degree(n, 0);
  for (const auto &succ : successors) {
    for (int v : succ) {
      ++in_degree[v];
    }
  }
  std::vector<int> order;
  order.reserve(n);
  std::vector<int> frontier;
  for (int v = 0; v < n; ++v) {
    if (in_degree[v] == 0) {
      frontier.push_back(v);
    }
  }
  while (!frontier.empty()) {
    int u = frontier.back();
    frontier.pop_back();
    order.push_back(u);
    for (int v : successors[u]) {
      if (--in_degree[v] == 0) {
        frontier.push_back(v);
      }
    }
  }
  if (static_cast<int>(order.size()) != n) {
    throw std::invalid_argument("topological_order: graph contains a cycle");
  }
  return order;
}

std::vector<timecount_t> compute_cp_to_sink(const std::vector<timecount_t> &durations,
                                            const std::vector<std::vector<int>> &successors) {
  if (durations.size() != successors.size()) {
    throw std::invalid_argument("compute_cp_to_sink: durations/successors size mismatch");
  }
  const std::vector<int> order = topological_order(successors);
  std::vector<timecount_t> cp(durations.size(), 0);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const int v = *it;
    timecount_t best = 0;
    for (int s : successors[v]) {
      best = std::max(best, cp[s]);
    }
    cp[v] = durations[v] + best;
  }
  return cp;
}

std::vector<timecount_t> compute_cp_to_sink(const TaskGraph &graph) {
  std::vector<timecount_t> durations(graph.node_count());
  for (int v = 0; v < graph.node_count(); ++v) {
    durations[v] = graph.duration(v);
  }
  std::vector<std::vector<int>> successors;
  successors.reserve(graph.node_count());
  for (int v = 0; v < graph.node_count(); ++v) {
    successors.push_back(graph.successors(v));
  }
  return compute_cp_to_sink(durations, successors);
}

namespace {

// Read-after-write dependency tracking over tiles: the most recent writer of
// each tile read by a kernel becomes its producer.
class DagBuilder {
public:
  explicit DagBuilder(int tiles) : tiles_(tiles), last_writer_(tiles * tiles, -1) {}

  int add_task(TaskKind kind, std::initializer_list<int> indices) {
    TaskNode node;
    node.id = static_cast<int>(nodes_.size());
    node.kind = kind;
    node.index_count = 0;
    for (int idx : indices) {
      node.indices[node.index_count++] = idx;
    }
    node.duration = kind_duration(kind);
    nodes_.push_back(node);
    reads_.emplace_back();
    return node.id;
  }

  void touch(int task, int row, int col, bool writes) {
    const int tile = row * tiles_ + col;
    const int producer = last_writer_[tile];
    if (producer >= 0) {
      reads_[task].push_back(producer);
    }
    if (writes) {
      last_writer_[tile] = task;
    }
  }

  std::vector<TaskNode> take_nodes() { return std::move(nodes_); }
  std::vector<std::vector<int>> take_producers() {
    for (auto &producers : reads_) {
      std::sort(producers.begin(), producers.end());
      producers.erase(std::unique(producers.begin(), producers.end()), producers.end());
    }
    return std::move(reads_);
  }

private:
  int tiles_;
  std::vector<int> last_writer_;  // per tile, -1 if untouched
  std::vector<TaskNode> nodes_;
  std::vector<std::vector<int>> reads_;  // producer task ids per task
};

}  // namespace

TaskGraph generate_cholesky_dag(int tiles) {
  if (tiles < 1) {
    throw std::invalid_argument("generate_cholesky_dag: tiles must be >= 1");
  }
  DagBuilder builder(tiles);
  for (int k = 0; k < tiles; ++k) {
    int potrf = builder.add_task(TaskKind::Potrf, {k});
    builder.touch(potrf, k, k, /*writes=*/true);
    for (int m = k + 1; m < tiles; ++m) {
      int trsm = builder.add_task(TaskKind::Trsm, {k, m});
      builder.touch(trsm, k, k, /*writes=*/false);
      builder.touch(trsm, m, k, /*writes=*/true);
    }
    for (int n = k + 1; n < tiles; ++n) {
      int syrk = builder.add_task(TaskKind::Syrk, {k, n});
      builder.touch(syrk, n, k, /*writes=*/false);
      builder.touch(syrk, n, n, /*writes=*/true);
      for (int m = n + 1; m < tiles; ++m) {
        int gemm = builder.add_task(TaskKind::Gemm, {k, n, m});
        builder.touch(gemm, m, k, /*writes=*/false);
        builder.touch(gemm, n, k, /*writes=*/false);
        builder.touch(gemm, m, n, /*writes=*/true);
      }
    }
  }

  TaskGraph graph;
  graph.tiles_ = tiles;
  graph.nodes_ = builder.take_nodes();
  const auto producers = builder.take_producers();

  TaskNode sink;
  sink.id = static_cast<int>(graph.nodes_.size());
  sink.kind = TaskKind::VirtualSink;
  sink.duration = 0;
  graph.nodes_.push_back(sink);

  const int n = static_cast<int>(graph.nodes_.size());
  const int sink_id = n - 1;
  graph.successors_.assign(n, {});
  graph.predecessors_.assign(n, {});
  for (int v = 0; v + 1 < n; ++v) {
    for (int u : producers[v]) {
      graph.successors_[u].push_back(v);
      graph.predecessors_[v].push_back(u);
    }
  }
  // Sinkless tasks feed the virtual sink.
  for (int v = 0; v + 1 < n; ++v) {
    if (graph.successors_[v].empty()) {
      graph.successors_[v].push_back(sink_id);
      graph.predecessors_[sink_id].push_back(v);
    }
  }
  for (int u = 0; u < n; ++u) {
    std::sort(graph.successors_[u].begin(), graph.successors_[u].end());
    for (int v : graph.successors_[u]) {
      graph.edges_.emplace_back(u, v);
    }
  }

  graph.total_work_ = 0;
  for (const auto &node : graph.nodes_) {
    graph.total_work_ += node.duration;
  }
  graph.cp_to_sink_ = compute_cp_to_sink(graph);
  graph.critical_path_ = graph.cp_to_sink_[0];
  return graph;
}

std::string export_dot(const TaskGraph &graph) {
  std::ostringstream out;
  out << "digraph cholesky {\n";
  for (const auto &node : graph.nodes()) {
    out << "  n" << node.id << " [label=\"" << node.label() << "\"];\n";
  }
  for (const auto &[src, dst] : graph.edges()) {
    out << "  n" << src << " -> n" << dst << ";\n";
  }
  out << "}\n";
  return out.str();
}

std::string export_json(const TaskGraph &graph) {
  nlohmann::ordered_json doc;
  doc["tiles"] = graph.tiles();
  doc["nodes"] = nlohmann::ordered_json::array();
  for (const auto &node : graph.nodes()) {
    nlohmann::ordered_json j;
    j["id"] = node.id;
    j["kind"] = kind_name(node.kind);
    j["indices"] = std::vector<int>(node.indices.begin(), node.indices.begin() + node.index_count);
    j["duration"] = node.duration;
    j["cp"] = graph.cp_to_sink(node.id);
    doc["nodes"].push_back(std::move(j));
  }
  doc["edges"] = nlohmann::ordered_json::array();
  for (const auto &[src, dst] : graph.edges()) {
    doc["edges"].push_back({src, dst});
  }
  doc["total_work"] = graph.total_work();
  doc["critical_path"] = graph.critical_path();
  return doc.dump(2);
}

}  // namespace dagsched
