#pragma once

#include <cmath>
#include <numeric>
#include <vector>

#include "manyclass/model.hpp"
#include "manyclass/rng.hpp"
#include "manyclass/types.hpp"

namespace testutil {

using namespace manyclass;

inline Matrix random_matrix(int rows, int cols, RngStream& rng, double scale = 1.0) {
  Matrix m(rows, cols);
  for (double& v : m.data) v = scale * rng.next_gaussian();
  return m;
}

inline Dataset random_dataset(int n, int dim, int num_classes, RngStream& rng) {
  Dataset d;
  d.inputs = random_matrix(n, dim, rng);
  d.num_classes = num_classes;
  d.labels.resize(n);
  for (int i = 0; i < n; ++i) {
    d.labels[i] = static_cast<ClassId>(rng.next_index(num_classes));
  }
  return d;
}

inline std::vector<int> all_indices(int n) {
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  return idx;
}

// dot(gradient, direction) over the full parameter space
inline double gradient_dot(const SparseGradient& g, const Matrix& direction) {
  double acc = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double* row = g.row(i);
    const double* dir = direction.row(g.classes[i]);
    for (int j = 0; j < g.dim; ++j) acc += row[j] * dir[j];
  }
  return acc;
}

// central finite difference of f along `direction` at `at`
template <typename F>
double central_difference(F&& f, const Matrix& at, const Matrix& direction, double step) {
  Matrix plus = at, minus = at;
  for (std::size_t i = 0; i < at.data.size(); ++i) {
    plus.data[i] += step * direction.data[i];
    minus.data[i] -= step * direction.data[i];
  }
  return (f(plus) - f(minus)) / (2.0 * step);
}

// relative error with an absolute fallback near zero
inline double rel_err(double got, double want) {
  const double denom = std::max(std::abs(want), 1e-8);
  return std::abs(got - want) / denom;
}

struct Welford {
  long long n = 0;
  double mean = 0.0;
  double m2 = 0.0;
  void add(double v) {
    ++n;
    const double delta = v - mean;
    mean += delta / static_cast<double>(n);
    m2 += delta * (v - mean);
  }
  double variance() const { return m2 / static_cast<double>(n - 1); }
  double std_error() const { return std::sqrt(variance() / static_cast<double>(n)); }
};

}  // namespace testutil
