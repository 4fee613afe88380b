#pragma once

#include <algorithm>
#include <cassert>
#include <random>
#include <vector>

namespace dagsched {

// Dense row-major 2-D array of doubles. 64-bit precision throughout: the
// shapes here are small and the gradient checks need the headroom.
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, 0.0) {}

  double &at(int r, int c) {
    assert(r >= 0 && r < rows && c >= 0 && c < cols);
    return data[static_cast<std::size_t>(r) * cols + c];
  }
  double at(int r, int c) const {
    assert(r >= 0 && r < rows && c >= 0 && c < cols);
    return data[static_cast<std::size_t>(r) * cols + c];
  }

  int size() const { return rows * cols; }
  bool same_shape(const Matrix &other) const { return rows == other.rows && cols == other.cols; }
  bool is_scalar() const { return rows == 1 && cols == 1; }
  double scalar() const {
    assert(is_scalar());
    return data[0];
  }

  static Matrix zeros(int r, int c) { return Matrix(r, c); }
  static Matrix filled(int r, int c, double value) {
    Matrix m(r, c);
    std::fill(m.data.begin(), m.data.end(), value);
    return m;
  }
  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows_init);
};

inline Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows_init) {
  const int r = static_cast<int>(rows_init.size());
  const int c = r > 0 ? static_cast<int>(rows_init.begin()->size()) : 0;
  Matrix m(r, c);
  int i = 0;
  for (const auto &row : rows_init) {
    assert(static_cast<int>(row.size()) == c);
    int j = 0;
    for (double v : row) {
      m.at(i, j++) = v;
    }
    ++i;
  }
  return m;
}

// Uniform draw in [0,1) from explicit engine bits; keeps runs reproducible
// independently of the standard library's distribution internals.
inline double canonical_uniform(std::mt19937_64 &rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Glorot-style uniform initialization scaled by fan-in + fan-out.
Matrix glorot_uniform(int rows, int cols, std::mt19937_64 &rng);

}  // namespace dagsched
