#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace manyclass {

using ClassId = std::int32_t;
using OpCount = std::int64_t;

// Dense row-major matrix of doubles. Used for weight matrices (one row per
// class), input collections (one row per datapoint) and optimizer state.
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(int r, int c, double fill = 0.0)
      : rows(r), cols(c), data(static_cast<std::size_t>(r) * static_cast<std::size_t>(c), fill) {}

  double* row(int r) { return data.data() + static_cast<std::size_t>(r) * cols; }
  const double* row(int r) const { return data.data() + static_cast<std::size_t>(r) * cols; }
  std::span<const double> row_span(int r) const {
    return {row(r), static_cast<std::size_t>(cols)};
  }
  std::span<double> row_span(int r) { return {row(r), static_cast<std::size_t>(cols)}; }

  double& at(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
  double at(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }

  bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }
  bool all_finite() const;
};

// Labelled classification data: N inputs of dimension D, labels in
// [0, num_classes).
struct Dataset {
  Matrix inputs;  // N x D
  std::vector<ClassId> labels;
  int num_classes = 0;

  int size() const { return inputs.rows; }
  int dim() const { return inputs.cols; }

  // Throws std::invalid_argument on shape or label-range violations.
  void validate() const;
};

}  // namespace manyclass
