#include "manyclass/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace manyclass {

bool Matrix::all_finite() const {
  for (double v : data) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

void Dataset::validate() const {
  if (inputs.rows != static_cast<int>(labels.size())) {
    throw std::invalid_argument("dataset: inputs rows and label count differ");
  }
  if (inputs.rows < 1) throw std::invalid_argument("dataset: needs at least one datapoint");
  if (num_classes < 1) throw std::invalid_argument("dataset: num_classes must be >= 1");
  for (ClassId c : labels) {
    if (c < 0 || c >= num_classes) {
      throw std::invalid_argument("dataset: label " + std::to_string(c) +
                                  " out of range [0, " + std::to_string(num_classes) + ")");
    }
  }
}

bool SparseGradient::all_finite() const {
  for (double v : values) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

GradientAccumulator::GradientAccumulator(int dim) { grad_.dim = dim; }

void GradientAccumulator::add(ClassId c, double coeff, std::span<const double> x) {
  auto [it, inserted] = slot_.try_emplace(c, grad_.classes.size());
  if (inserted) {
    grad_.classes.push_back(c);
    grad_.values.resize(grad_.values.size() + grad_.dim, 0.0);
  }
  double* row = grad_.row(it->second);
  for (int j = 0; j < grad_.dim; ++j) row[j] += coeff * x[j];
}

SparseGradient GradientAccumulator::take() {
  slot_.clear();
  return std::move(grad_);
}

void scores(const Matrix& weights, std::span<const double> x, std::span<double> out,
            OpCount* ops) {
  if (static_cast<int>(x.size()) != weights.cols) {
    throw std::invalid_argument("scores: input dimension does not match weight columns");
  }
  if (static_cast<int>(out.size()) != weights.rows) {
    throw std::invalid_argument("scores: output size does not match class count");
  }
  const int d = weights.cols;
  for (int c = 0; c < weights.rows; ++c) {
    const double* wc = weights.row(c);
    double s = 0.0;
    for (int j = 0; j < d; ++j) s += wc[j] * x[j];
    out[c] = s;
  }
  if (ops) *ops += weights.rows;
}

std::vector<double> scores(const Matrix& weights, std::span<const double> x, OpCount* ops) {
  std::vector<double> out(weights.rows);
  scores(weights, x, out, ops);
  return out;
}

double log_sum_exp(std::span<const double> v) {
  double m = -std::numeric_limits<double>::infinity();
  for (double t : v) m = std::max(m, t);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double t : v) s += std::exp(t - m);
  return m + std::log(s);
}

void softmax_inplace(std::span<double> v) {
  double m = -std::numeric_limits<double>::infinity();
  for (double t : v) m = std::max(m, t);
  double s = 0.0;
  for (double& t : v) {
    t = std::exp(t - m);
    s += t;
  }
  const double inv = 1.0 / s;
  for (double& t : v) t *= inv;
}

std::vector<double> softmax(std::span<const double> score_vec) {
  std::vector<double> p(score_vec.begin(), score_vec.end());
  softmax_inplace(p);
  return p;
}

double log_likelihood(const Matrix& weights, const Dataset& data) {
  std::vector<int> all(data.size());
  std::iota(all.begin(), all.end(), 0);
  return log_likelihood(weights, data, all);
}

double log_likelihood(const Matrix& weights, const Dataset& data,
                      std::span<const int> minibatch) {
  if (weights.rows != data.num_classes || weights.cols != data.dim()) {
    throw std::invalid_argument("log_likelihood: weight shape does not match dataset");
  }
  std::vector<double> s(weights.rows);
  double ll = 0.0;
  for (int idx : minibatch) {
    scores(weights, data.inputs.row_span(idx), s);
    ll += s[data.labels[idx]] - log_sum_exp(s);
  }
  return ll;
}

std::vector<double> gamma_exact(const Matrix& weights, std::span<const double> x,
                                ClassId label, OpCount* ops) {
  if (label < 0 || label >= weights.rows) {
    throw std::invalid_argument("gamma_exact: label out of range");
  }
  std::vector<double> g = scores(weights, x, ops);
  softmax_inplace(g);
  for (double& v : g) v = -v;
  g[label] += 1.0;
  return g;
}

SparseGradient gradient_exact(const Matrix& weights, const Dataset& data,
                              std::span<const int> minibatch) {
  if (minibatch.empty()) throw std::invalid_argument("gradient_exact: empty minibatch");
  const int num_classes = weights.rows;
  const int d = weights.cols;

  SparseGradient g;
  g.dim = d;
  g.dense = true;
  g.classes.resize(num_classes);
  std::iota(g.classes.begin(), g.classes.end(), 0);
  g.values.assign(static_cast<std::size_t>(num_classes) * d, 0.0);

  std::vector<double> p(num_classes);
  for (int idx : minibatch) {
    const std::span<const double> x = data.inputs.row_span(idx);
    scores(weights, x, p, &g.op_count);
    softmax_inplace(p);
    const ClassId label = data.labels[idx];
    for (int c = 0; c < num_classes; ++c) {
      const double gamma = (c == label ? 1.0 : 0.0) - p[c];
      double* row = g.row(static_cast<std::size_t>(c));
      for (int j = 0; j < d; ++j) row[j] += gamma * x[j];
    }
  }
  return g;
}

}  // namespace manyclass
