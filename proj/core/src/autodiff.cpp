#include "dagsched/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace dagsched {

namespace {

constexpr double kEntropyFloor = 1e-300;  // below this a probability contributes nothing

void require(bool condition, const char *message) {
  if (!condition) {
    throw std::invalid_argument(message);
  }
}

}  // namespace

Matrix glorot_uniform(int rows, int cols, std::mt19937_64 &rng) {
  Matrix m(rows, cols);
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  for (double &v : m.data) {
    v = limit * (2.0 * canonical_uniform(rng) - 1.0);
  }
  return m;
}

Var Tape::push(Matrix value, std::function<void(Tape &, const Matrix &)> backprop) {
  Node node;
  node.grad = Matrix::zeros(value.rows, value.cols);
  node.value = std::move(value);
  node.backprop = std::move(backprop);
  nodes_.push_back(std::move(node));
  return Var{this, static_cast<int>(nodes_.size()) - 1};
}

void Tape::check_owned(Var v) const {
  require(v.tape == this && v.id >= 0 && v.id < static_cast<int>(nodes_.size()),
          "tape: variable does not belong to this tape");
}

Var Tape::leaf(Matrix value) {
  return push(std::move(value), nullptr);
}

void Tape::backward(Var loss) {
  check_owned(loss);
  require(nodes_[loss.id].value.is_scalar(), "backward: loss must be 1x1");
  nodes_[loss.id].grad.at(0, 0) += 1.0;
  for (int id = loss.id; id >= 0; --id) {
    Node &node = nodes_[id];
    if (node.backprop) {
      node.backprop(*this, node.grad);
    }
  }
}

Var Tape::matmul(Var a, Var b) {
  check_owned(a);
  check_owned(b);
  const Matrix &A = value(a);
  const Matrix &B = value(b);
  require(A.cols == B.rows, "matmul: inner dimensions differ");
  Matrix out(A.rows, B.cols);
  for (int i = 0; i < A.rows; ++i) {
    for (int k = 0; k < A.cols; ++k) {
      const double aik = A.at(i, k);
      if (aik == 0.0) {
        continue;
      }
      for (int j = 0; j < B.cols; ++j) {
        out.at(i, j) += aik * B.at(k, j);
      }
    }
  }
  return push(std::move(out), [a, b](Tape &t, const Matrix &g) {
    const Matrix &A = t.value(a);
    const Matrix &B = t.value(b);
    Matrix &da = t.grad_mut(a);
    Matrix &db = t.grad_mut(b);
    // dA += G * B^T
    for (int i = 0; i < A.rows; ++i) {
      for (int j = 0; j < B.cols; ++j) {
        const double gij = g.at(i, j);
        if (gij == 0.0) {
          continue;
        }
        for (int k = 0; k < A.cols; ++k) {
          da.at(i, k) += gij * B.at(k, j);
        }
      }
    }
    // dB += A^T * G
    for (int i = 0; i < A.rows; ++i) {
      for (int k = 0; k < A.cols; ++k) {
        const double aik = A.at(i, k);
        if (aik == 0.0) {
          continue;
        }
        for (int j = 0; j < B.cols; ++j) {
          db.at(k, j) += aik * g.at(i, j);
        }
      }
    }
  });
}

Var Tape::add(Var a, Var b) {
  check_owned(a);
  check_owned(b);
  require(value(a).same_shape(value(b)), "add: shape mismatch");
  Matrix out = value(a);
  const Matrix &B = value(b);
  for (int i = 0; i < out.size(); ++i) {
    out.data[i] += B.data[i];
  }
  return push(std::move(out), [a, b](Tape &t, const Matrix &g) {
    Matrix &da = t.grad_mut(a);
    Matrix &db = t.grad_mut(b);
    for (int i = 0; i < g.size(); ++i) {
      da.data[i] += g.data[i];
      db.data[i] += g.data[i];
    }
  });
}

Var Tape::sub(Var a, Var b) {
  check_owned(a);
  check_owned(b);
  require(value(a).same_shape(value(b)), "sub: shape mismatch");
  Matrix out = value(a);
  const Matrix &B = value(b);
  for (int i = 0; i < out.size(); ++i) {
    out.data[i] -= B.data[i];
  }
  return push(std::move(out), [a, b](Tape &t, const Matrix &g) {
    Matrix &da = t.grad_mut(a);
    Matrix &db = t.grad_mut(b);
    for (int i = 0; i < g.size(); ++i) {
      da.data[i] += g.data[i];
      db.data[i] -= g.data[i];
    }
  });
}

Var Tape::mul(Var a, Var b) {
  check_owned(a);
  check_owned(b);
  require(value(a).same_shape(value(b)), "mul: shape mismatch");
  Matrix out = value(a);
  const Matrix &B = value(b);
  for (int i = 0; i < out.size(); ++i) {
    out.data[i] *= B.data[i];
  }
  return push(std::move(out), [a, b](Tape &t, const Matrix &g) {
    const Matrix &A = t.value(a);
    const Matrix &B = t.value(b);
    Matrix &da = t.grad_mut(a);
    Matrix &db = t.grad_mut(b);
    for (int i = 0; i < g.size(); ++i) {
      da.data[i] += g.data[i] * B.data[i];
      db.data[i] += g.data[i] * A.data[i];
    }
  });
}

Var Tape::scale(Var a, double factor) {
  check_owned(a);
  Matrix out = value(a);
  for (double &v : out.data) {
    v *= factor;
  }
  return push(std::move(out), [a, factor](Tape &t, const Matrix &g) {
    Matrix &da = t.grad_mut(a);
    for (int i = 0; i < g.size(); ++i) {
      da.data[i] += factor * g.data[i];
    }
  });
}

Var Tape::relu(Var a) {
  check_owned(a);
  Matrix out = value(a);
  for (double &v : out.data) {
    v = std::max(v, 0.0);
  }
  return push(std::move(out), [a](Tape &t, const Matrix &g) {
    const Matrix &A = t.value(a);
    Matrix &da = t.grad_mut(a);
    for (int i = 0; i < g.size(); ++i) {
      if (A.data[i] > 0.0) {
        da.data[i] += g.data[i];
      }
    }
  });
}

Var Tape::log(Var a) {
  check_owned(a);
  Matrix out = value(a);
  for (double &v : out.data) {
    v = std::log(v);
  }
  return push(std::move(out), [a](Tape &t, const Matrix &g) {
    const Matrix &A = t.value(a);
    Matrix &da = t.grad_mut(a);
    for (int i = 0; i < g.size(); ++i) {
      da.data[i] += g.data[i] / A.data[i];
    }
  });
}

Var Tape::sum(Var a) {
  check_owned(a);
  Matrix out(1, 1);
  for (double v : value(a).data) {
    out.data[0] += v;
  }
  return push(std::move(out), [a](Tape &t, const Matrix &g) {
    Matrix &da = t.grad_mut(a);
    const double gv = g.at(0, 0);
    for (double &v : da.data) {
      v += gv;
    }
  });
}

Var Tape::mean_pool_rows(Var a) {
  check_owned(a);
  const Matrix &A = value(a);
  require(A.rows >= 1, "mean_pool_rows: empty input");
  Matrix out(1, A.cols);
  for (int i = 0; i < A.rows; ++i) {
    for (int j = 0; j < A.cols; ++j) {
      out.at(0, j) += A.at(i, j);
    }
  }
  const double inv = 1.0 / A.rows;
  for (double &v : out.data) {
    v *= inv;
  }
  return push(std::move(out), [a, inv](Tape &t, const Matrix &g) {
    Matrix &da = t.grad_mut(a);
    for (int i = 0; i < da.rows; ++i) {
      for (int j = 0; j < da.cols; ++j) {
        da.at(i, j) += g.at(0, j) * inv;
      }
    }
  });
}

Var Tape::gather_entry(Var a, int row, int col) {
  check_owned(a);
  const Matrix &A = value(a);
  require(row >= 0 && row < A.rows && col >= 0 && col < A.cols,
          "gather_entry: index out of range");
  Matrix out(1, 1);
  out.at(0, 0) = A.at(row, col);
  return push(std::move(out), [a, row, col](Tape &t, const Matrix &g) {
    t.grad_mut(a).at(row, col) += g.at(0, 0);
  });
}

Var Tape::concat_entries(const std::vector<EntryRef> &entries) {
  require(!entries.empty(), "concat_entries: empty entry list");
  Matrix out(1, static_cast<int>(entries.size()));
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const EntryRef &e = entries[i];
    check_owned(e.var);
    const Matrix &src = value(e.var);
    require(e.row >= 0 && e.row < src.rows && e.col >= 0 && e.col < src.cols,
            "concat_entries: index out of range");
    out.at(0, static_cast<int>(i)) = src.at(e.row, e.col);
  }
  std::vector<EntryRef> picks = entries;
  return push(std::move(out), [picks](Tape &t, const Matrix &g) {
    for (std::size_t i = 0; i < picks.size(); ++i) {
      t.grad_mut(picks[i].var).at(picks[i].row, picks[i].col) += g.at(0, static_cast<int>(i));
    }
  });
}

Var Tape::masked_row_softmax(Var logits, const std::vector<std::uint8_t> &mask) {
  check_owned(logits);
  const Matrix &Z = value(logits);
  require(static_cast<int>(mask.size()) == Z.size(), "masked_row_softmax: mask shape mismatch");
  Matrix out(Z.rows, Z.cols);
  for (int r = 0; r < Z.rows; ++r) {
    const std::size_t base = static_cast<std::size_t>(r) * Z.cols;
    double max_z = -std::numeric_limits<double>::infinity();
    for (int c = 0; c < Z.cols; ++c) {
      if (mask[base + c]) {
        max_z = std::max(max_z, Z.at(r, c));
      }
    }
    require(max_z != -std::numeric_limits<double>::infinity(),
            "masked_row_softmax: a row has no unmasked entry");
    double denom = 0.0;
    for (int c = 0; c < Z.cols; ++c) {
      if (mask[base + c]) {
        out.at(r, c) = std::exp(Z.at(r, c) - max_z);
        denom += out.at(r, c);
      }
    }
    for (int c = 0; c < Z.cols; ++c) {
      out.at(r, c) = mask[base + c] ? out.at(r, c) / denom : 0.0;
    }
  }
  Matrix probs = out;  // captured for the backward rule
  std::vector<std::uint8_t> m = mask;
  return push(std::move(out), [logits, probs, m](Tape &t, const Matrix &g) {
    Matrix &dz = t.grad_mut(logits);
    for (int r = 0; r < probs.rows; ++r) {
      const std::size_t base = static_cast<std::size_t>(r) * probs.cols;
      double dot = 0.0;
      for (int c = 0; c < probs.cols; ++c) {
        if (m[base + c]) {
          dot += g.at(r, c) * probs.at(r, c);
        }
      }
      for (int c = 0; c < probs.cols; ++c) {
        if (m[base + c]) {
          dz.at(r, c) += probs.at(r, c) * (g.at(r, c) - dot);
        }
      }
    }
  });
}

Var Tape::masked_entropy(Var probs, const std::vector<std::uint8_t> &mask) {
  check_owned(probs);
  const Matrix &P = value(probs);
  require(static_cast<int>(mask.size()) == P.size(), "masked_entropy: mask shape mismatch");
  Matrix out(1, 1);
  for (int i = 0; i < P.size(); ++i) {
    if (mask[i] && P.data[i] > kEntropyFloor) {
      out.data[0] -= P.data[i] * std::log(P.data[i]);
    }
  }
  std::vector<std::uint8_t> m = mask;
  return push(std::move(out), [probs, m](Tape &t, const Matrix &g) {
    const Matrix &P = t.value(probs);
    Matrix &dp = t.grad_mut(probs);
    const double gv = g.at(0, 0);
    for (int i = 0; i < P.size(); ++i) {
      if (m[i] && P.data[i] > kEntropyFloor) {
        dp.data[i] += gv * (-(std::log(P.data[i]) + 1.0));
      }
    }
  });
}

Var Tape::graph_aggregate(Var h, const std::vector<std::pair<int, int>> &edges) {
  check_owned(h);
  const Matrix &H = value(h);
  std::vector<int> degree(H.rows, 0);
  for (const auto &[src, dst] : edges) {
    require(src >= 0 && src < H.rows && dst >= 0 && dst < H.rows,
            "graph_aggregate: edge index out of range");
    ++degree[dst];
  }
  struct WeightedEdge {
    int src;
    int dst;
    double coeff;
  };
  std::vector<WeightedEdge> weighted;
  weighted.reserve(edges.size());
  for (const auto &[src, dst] : edges) {
    require(degree[src] > 0, "graph_aggregate: edge list is not symmetric");
    weighted.push_back(
        {src, dst, 1.0 / std::sqrt(static_cast<double>(degree[src]) * degree[dst])});
  }
  Matrix out(H.rows, H.cols);
  for (const auto &e : weighted) {
    for (int j = 0; j < H.cols; ++j) {
      out.at(e.dst, j) += e.coeff * H.at(e.src, j);
    }
  }
  return push(std::move(out), [h, weighted](Tape &t, const Matrix &g) {
    Matrix &dh = t.grad_mut(h);
    for (const auto &e : weighted) {
      for (int j = 0; j < dh.cols; ++j) {
        dh.at(e.src, j) += e.coeff * g.at(e.dst, j);
      }
    }
  });
}

}  // namespace dagsched
