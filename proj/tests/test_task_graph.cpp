#include <doctest.h>

#include <algorithm>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "dagsched/task_graph.hpp"

using namespace dagsched;

namespace {

long long real_task_count_formula(long long t) {
  return t + t * (t - 1) / 2 + t * (t - 1) / 2 + t * (t - 1) * (t - 2) / 6;
}

long long total_work_formula(long long t) {
  return 11 * t + 8 * (t * (t - 1) / 2) + 2 * (t * (t - 1) / 2) + 3 * (t * (t - 1) * (t - 2) / 6);
}

int find_task(const TaskGraph &g, TaskKind kind, std::initializer_list<int> indices) {
  for (const auto &node : g.nodes()) {
    if (node.kind != kind || node.index_count != static_cast<int>(indices.size())) {
      continue;
    }
    bool match = true;
    int i = 0;
    for (int idx : indices) {
      match = match && node.indices[i++] == idx;
    }
    if (match) {
      return node.id;
    }
  }
  return -1;
}

}  // namespace

TEST_CASE("characteristics match the reference table exactly") {
  struct Row {
    int tiles;
    int nodes;
    timecount_t work;
    timecount_t cp;
  };
  for (const Row &row : {Row{4, 21, 116, 74}, Row{8, 121, 536, 158}, Row{16, 817, 3056, 326}}) {
    TaskGraph g = generate_cholesky_dag(row.tiles);
    CHECK(g.node_count() == row.nodes);
    CHECK(g.total_work() == row.work);
    CHECK(g.critical_path() == row.cp);
  }
}

TEST_CASE("single tile degenerates to one kernel plus the sink") {
  TaskGraph g = generate_cholesky_dag(1);
  CHECK(g.node_count() == 2);
  CHECK(g.total_work() == 11);
  CHECK(g.critical_path() == 11);
  CHECK(g.node(0).kind == TaskKind::Potrf);
  CHECK(g.node(1).kind == TaskKind::VirtualSink);
}

TEST_CASE("closed-form node count, work and critical path for tiles 1..32") {
  for (int t = 1; t <= 32; ++t) {
    TaskGraph g = generate_cholesky_dag(t);
    CHECK(g.node_count() == real_task_count_formula(t) + 1);
    CHECK(g.total_work() == total_work_formula(t));
    CHECK(g.critical_path() == 21 * (t - 1) + 11);
  }
}

TEST_CASE("rejects zero tiles") {
  CHECK_THROWS_AS(generate_cholesky_dag(0), std::invalid_argument);
}

TEST_CASE("unique source and sink, every node on a path to the sink") {
  for (int t : {2, 5, 9}) {
    TaskGraph g = generate_cholesky_dag(t);
    int sources = 0;
    for (int v = 0; v < g.node_count(); ++v) {
      if (g.predecessor_count(v) == 0) {
        ++sources;
        CHECK(v == g.source_id());
      }
      if (v != g.sink_id()) {
        CHECK(g.successor_count(v) > 0);  // reaches the sink transitively
        CHECK(g.cp_to_sink(v) > 0);
      }
    }
    CHECK(sources == 1);
    CHECK(g.successor_count(g.sink_id()) == 0);
    CHECK(g.cp_to_sink(g.sink_id()) == 0);
  }
}

TEST_CASE("node ids form a topological order") {
  TaskGraph g = generate_cholesky_dag(6);
  for (const auto &[src, dst] : g.edges()) {
    CHECK(src < dst);
  }
  std::vector<std::vector<int>> successors;
  for (int v = 0; v < g.node_count(); ++v) {
    successors.push_back(g.successors(v));
  }
  std::vector<int> order = topological_order(successors);
  std::vector<int> position(g.node_count());
  for (int i = 0; i < g.node_count(); ++i) {
    position[order[i]] = i;
  }
  for (const auto &[src, dst] : g.edges()) {
    CHECK(position[src] < position[dst]);
  }
}

TEST_CASE("cp_to_sink is monotone along edges with equality somewhere") {
  for (int t : {4, 8}) {
    TaskGraph g = generate_cholesky_dag(t);
    for (int v = 0; v < g.node_count(); ++v) {
      if (v == g.sink_id()) {
        continue;
      }
      bool tight = false;
      for (int s : g.successors(v)) {
        CHECK(g.cp_to_sink(v) >= g.duration(v) + g.cp_to_sink(s));
        tight = tight || g.cp_to_sink(v) == g.duration(v) + g.cp_to_sink(s);
      }
      CHECK(tight);
    }
  }
}

TEST_CASE("cp_to_sink values of named tasks") {
  TaskGraph g = generate_cholesky_dag(4);
  const int last_potrf = find_task(g, TaskKind::Potrf, {3});
  REQUIRE(last_potrf >= 0);
  CHECK(g.cp_to_sink(last_potrf) == 11);
  CHECK(g.cp_to_sink(g.source_id()) == 74);

  // recomputation from scratch agrees with the cached values
  auto fresh = compute_cp_to_sink(g);
  for (int v = 0; v < g.node_count(); ++v) {
    CHECK(fresh[v] == g.cp_to_sink(v));
  }
}

TEST_CASE("cp computation rejects cyclic input") {
  std::vector<timecount_t> durations = {1, 1, 1};
  std::vector<std::vector<int>> successors = {{1}, {2}, {0}};
  CHECK_THROWS_AS(compute_cp_to_sink(durations, successors), std::invalid_argument);
}

TEST_CASE("successor and predecessor counts") {
  TaskGraph g4 = generate_cholesky_dag(4);
  CHECK(g4.successor_count(g4.source_id()) == 3);  // the three TRSM(0,m)
  CHECK(g4.successor_count(g4.sink_id()) == 0);

  TaskGraph g5 = generate_cholesky_dag(5);
  CHECK(g5.successor_count(g5.source_id()) == 4);

  // dependency structure of the named kernels
  const int trsm01 = find_task(g4, TaskKind::Trsm, {0, 1});
  const int syrk01 = find_task(g4, TaskKind::Syrk, {0, 1});
  const int potrf1 = find_task(g4, TaskKind::Potrf, {1});
  const int gemm012 = find_task(g4, TaskKind::Gemm, {0, 1, 2});
  REQUIRE(trsm01 >= 0);
  REQUIRE(syrk01 >= 0);
  REQUIRE(potrf1 >= 0);
  REQUIRE(gemm012 >= 0);
  auto has_edge = [&](int u, int v) {
    const auto &succ = g4.successors(u);
    return std::find(succ.begin(), succ.end(), v) != succ.end();
  };
  CHECK(has_edge(g4.source_id(), trsm01));
  CHECK(has_edge(trsm01, syrk01));
  CHECK(has_edge(syrk01, potrf1));
  CHECK(has_edge(trsm01, gemm012));
  CHECK(g4.predecessor_count(gemm012) == 2);  // TRSM(0,1), TRSM(0,2)
}

TEST_CASE("lower bound certificate") {
  TaskGraph g = generate_cholesky_dag(8);
  CHECK(g.makespan_lower_bound(1) == doctest::Approx(536.0));
  CHECK(g.makespan_lower_bound(4) == doctest::Approx(158.0));  // CP dominates W/p = 134
  CHECK(g.makespan_lower_bound(2) == doctest::Approx(268.0));
  CHECK_THROWS_AS(g.makespan_lower_bound(0), std::invalid_argument);
}

namespace {

// Minimal well-formedness check for the exported DOT text: one digraph block,
// and every line inside is either a node statement with a label or an edge.
bool dot_parses(const std::string &text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "digraph cholesky {") {
    return false;
  }
  bool closed = false;
  while (std::getline(in, line)) {
    if (line == "}") {
      closed = true;
      continue;
    }
    if (closed && !line.empty()) {
      return false;
    }
    if (!closed) {
      const bool node_stmt = line.find("[label=\"") != std::string::npos &&
                             line.rfind("\"];") == line.size() - 3;
      const bool edge_stmt = line.find(" -> ") != std::string::npos &&
                             line.rfind(';') == line.size() - 1;
      if (!(node_stmt || edge_stmt)) {
        return false;
      }
    }
  }
  return closed;
}

int count_labels(const std::string &text, const std::string &kind) {
  int count = 0;
  std::size_t pos = 0;
  const std::string needle = "label=\"" + kind + "(";
  while ((pos = text.find(needle, pos)) != std::string::npos) {
    ++count;
    pos += needle.size();
  }
  return count;
}

}  // namespace

TEST_CASE("dot export") {
  std::string tiny = export_dot(generate_cholesky_dag(1));
  CHECK(count_labels(tiny, "POTRF") == 1);
  CHECK(dot_parses(tiny));

  std::string five = export_dot(generate_cholesky_dag(5));
  CHECK(count_labels(five, "POTRF") == 5);
  CHECK(count_labels(five, "TRSM") == 10);
  CHECK(count_labels(five, "SYRK") == 10);
  CHECK(count_labels(five, "GEMM") == 10);
  CHECK(dot_parses(five));
  CHECK(dot_parses(export_dot(generate_cholesky_dag(9))));
}

TEST_CASE("json export schema") {
  TaskGraph g = generate_cholesky_dag(4);
  auto doc = nlohmann::json::parse(export_json(g));
  CHECK(doc["tiles"] == 4);
  CHECK(doc["nodes"].size() == 21);
  CHECK(doc["edges"].size() == g.edges().size());
  CHECK(doc["total_work"] == 116);
  CHECK(doc["critical_path"] == 74);
  CHECK(doc["nodes"][0]["kind"] == "POTRF");
  CHECK(doc["nodes"][0]["duration"] == 11);
  CHECK(doc["nodes"][0]["cp"] == 74);
  CHECK(doc["nodes"][0]["indices"] == nlohmann::json::array({0}));
  for (const auto &edge : doc["edges"]) {
    CHECK(edge.size() == 2);
    CHECK(edge[0].get<int>() < edge[1].get<int>());
  }
}

TEST_CASE("task labels") {
  TaskGraph g = generate_cholesky_dag(3);
  CHECK(g.node(0).label() == "POTRF(0)");
  CHECK(g.node(g.sink_id()).label() == "SINK");
  const int gemm = find_task(g, TaskKind::Gemm, {0, 1, 2});
  REQUIRE(gemm >= 0);
  CHECK(g.node(gemm).label() == "GEMM(0,1,2)");
}
