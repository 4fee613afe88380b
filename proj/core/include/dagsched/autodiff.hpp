#pragma once

#include <cstdint>
#include <functional>
#include <tuple>
#include <utility>
#include <vector>

#include "dagsched/matrix.hpp"

namespace dagsched {

class Tape;

// Handle to a node on a tape. Cheap to copy; valid as long as the tape lives.
struct Var {
  Tape *tape = nullptr;
  int id = -1;
};

// Entry picked out of a matrix when assembling a logit row.
struct EntryRef {
  Var var;
  int row = 0;
  int col = 0;
};

// Reverse-mode tape over dense matrices. Nodes are appended in evaluation
// order, which is a topological order of the expression graph, so the
// backward sweep is a single reverse pass. One backward call per tape.
class Tape {
public:
  Var leaf(Matrix value);

  const Matrix &value(Var v) const { return nodes_[v.id].value; }
  const Matrix &grad(Var v) const { return nodes_[v.id].grad; }
  int node_count() const { return static_cast<int>(nodes_.size()); }

  // Seeds d(loss)/d(loss) = 1 and accumulates exact gradients into every
  // node reachable from `loss`. Throws if loss is not 1x1.
  void backward(Var loss);

  Var matmul(Var a, Var b);
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);  // elementwise
  Var scale(Var a, double factor);
  Var relu(Var a);
  Var log(Var a);
  Var sum(Var a);             // -> 1x1
  Var mean_pool_rows(Var a);  // n x c -> 1 x c
  Var gather_entry(Var a, int row, int col);       // -> 1x1
  Var concat_entries(const std::vector<EntryRef> &entries);  // -> 1 x n

  // Row-wise softmax where masked entries (mask 0) get probability exactly 0.
  // The mask matches the value shape, row-major. Each row needs at least one
  // unmasked entry.
  Var masked_row_softmax(Var logits, const std::vector<std::uint8_t> &mask);

  // Shannon entropy summed over unmasked entries of a probability matrix.
  Var masked_entropy(Var probs, const std::vector<std::uint8_t> &mask);

  // out_i = sum over edges (j -> i) of (d_i d_j)^(-1/2) * h_j, degrees counted
  // from the edge list itself. Callers pass the symmetric closure with
  // self-loops, as produced by the observation extractor.
  Var graph_aggregate(Var h, const std::vector<std::pair<int, int>> &edges);

private:
  struct Node {
    Matrix value;
    Matrix grad;
    std::function<void(Tape &, const Matrix &)> backprop;  // scatters out-grad to inputs
  };

  Var push(Matrix value, std::function<void(Tape &, const Matrix &)> backprop);
  Matrix &grad_mut(Var v) { return nodes_[v.id].grad; }
  void check_owned(Var v) const;

  std::vector<Node> nodes_;
};

}  // namespace dagsched
