#pragma once

#include <span>
#include <unordered_map>
#include <vector>

#include "manyclass/types.hpp"

namespace manyclass {

// Per-class gradient rows for one minibatch. Rows appear in first-touch order;
// `dense` marks the all-classes layout 0..C-1. op_count tallies score
// evaluations of the form w^T x (with or without the exponential).
struct SparseGradient {
  std::vector<ClassId> classes;
  std::vector<double> values;  // classes.size() rows of `dim` doubles each
  int dim = 0;
  OpCount op_count = 0;
  bool dense = false;

  std::size_t size() const { return classes.size(); }
  double* row(std::size_t i) { return values.data() + i * dim; }
  const double* row(std::size_t i) const { return values.data() + i * dim; }
  bool all_finite() const;
};

// Merges per-datapoint contributions in a fixed first-touch order so that
// accumulation is a deterministic ordered reduction.
class GradientAccumulator {
 public:
  explicit GradientAccumulator(int dim);

  // row_c += coeff * x
  void add(ClassId c, double coeff, std::span<const double> x);
  void add_ops(OpCount n) { grad_.op_count += n; }
  SparseGradient take();

 private:
  std::unordered_map<ClassId, std::size_t> slot_;
  SparseGradient grad_;
};

// Scores s(c, x) = w_c . x for all classes. Adds C to *ops when counting.
void scores(const Matrix& weights, std::span<const double> x, std::span<double> out,
            OpCount* ops = nullptr);
std::vector<double> scores(const Matrix& weights, std::span<const double> x,
                           OpCount* ops = nullptr);

double log_sum_exp(std::span<const double> v);

// Max-shifted softmax; safe for any finite scores.
void softmax_inplace(std::span<double> v);
std::vector<double> softmax(std::span<const double> score_vec);

// Sum over datapoints of log p(label | input), each term via log-sum-exp.
double log_likelihood(const Matrix& weights, const Dataset& data);
double log_likelihood(const Matrix& weights, const Dataset& data,
                      std::span<const int> minibatch);

// gamma(c) = delta(c, label) - p(c | x); entries lie in [-1, 1] and sum to 0.
std::vector<double> gamma_exact(const Matrix& weights, std::span<const double> x,
                                ClassId label, OpCount* ops = nullptr);

// Dense minibatch gradient of the log likelihood: row a = sum_m gamma_m(a) x_m.
SparseGradient gradient_exact(const Matrix& weights, const Dataset& data,
                              std::span<const int> minibatch);

}  // namespace manyclass
