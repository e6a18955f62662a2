#include <stdexcept>
#include <cmath>

#include "doctest.h"
#include "manyclass/model.hpp"
#include "manyclass/rng.hpp"
#include "test_util.hpp"

using namespace manyclass;
using namespace testutil;

TEST_CASE("scores: zero weights give zero scores") {
  const Matrix w(4, 3, 0.0);
  const std::vector<double> x = {1.0, -2.0, 3.0};
  for (double s : scores(w, x)) CHECK(s == 0.0);
}

TEST_CASE("scores: unit rows select coordinates") {
  Matrix w(2, 2, 0.0);
  w.at(0, 0) = 1.0;
  w.at(1, 1) = 1.0;
  const std::vector<double> x = {3.0, -1.0};
  const auto s = scores(w, x);
  CHECK(s[0] == 3.0);
  CHECK(s[1] == -1.0);
}

TEST_CASE("scores: random instance matches elementwise dot-product oracle") {
  RngStream rng = derive_stream(7, StreamTag::kInstance);
  const Matrix w = random_matrix(5, 3, rng);
  const Matrix xm = random_matrix(1, 3, rng);
  const std::vector<double> x(xm.data);
  const auto s = scores(w, x);
  for (int c = 0; c < 5; ++c) {
    // oracle: explicit per-element sum, independent of the library loop
    double want = 0.0;
    for (int j = 0; j < 3; ++j) want += w.at(c, j) * x[j];
    CHECK(std::abs(s[c] - want) < 1e-12);
  }
}

TEST_CASE("scores: dimension mismatch is a configuration error") {
  const Matrix w(3, 4, 0.0);
  const std::vector<double> x = {1.0, 2.0};
  CHECK_THROWS_AS(scores(w, x), std::invalid_argument);
}

TEST_CASE("scores: op counter advances by C") {
  const Matrix w(7, 2, 0.5);
  const std::vector<double> x = {1.0, 1.0};
  OpCount ops = 3;
  scores(w, x, &ops);
  CHECK(ops == 10);
}

TEST_CASE("softmax: all-zero scores are uniform") {
  std::vector<double> s(4, 0.0);
  softmax_inplace(s);
  for (double p : s) CHECK(p == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("softmax: (0, ln 3) gives (1/4, 3/4)") {
  std::vector<double> s = {0.0, std::log(3.0)};
  softmax_inplace(s);
  CHECK(s[0] == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(s[1] == doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("softmax: probability vector and shift invariance") {
  RngStream rng = derive_stream(21, StreamTag::kInstance);
  for (int trial = 0; trial < 50; ++trial) {
    const int c = 2 + static_cast<int>(rng.next_index(30));
    std::vector<double> s(c);
    for (double& v : s) v = 40.0 * rng.next_gaussian();
    const double shift = 100.0 * rng.next_gaussian();
    std::vector<double> shifted = s;
    for (double& v : shifted) v += shift;
    const auto p = softmax(s);
    const auto q = softmax(shifted);
    double total = 0.0;
    for (int i = 0; i < c; ++i) {
      CHECK(p[i] >= 0.0);
      total += p[i];
      CHECK(std::abs(p[i] - q[i]) < 1e-12);
    }
    CHECK(std::abs(total - 1.0) < 1e-12);
  }
}

TEST_CASE("log_likelihood: zero weights give N log(1/C)") {
  RngStream rng = derive_stream(3, StreamTag::kInstance);
  const Dataset data = random_dataset(17, 4, 6, rng);
  const Matrix w(6, 4, 0.0);
  CHECK(log_likelihood(w, data) == doctest::Approx(17.0 * std::log(1.0 / 6.0)).epsilon(1e-12));
}

TEST_CASE("log_likelihood: single datapoint with scores (0, ln 3)") {
  Dataset data;
  data.inputs = Matrix(1, 1, 1.0);
  data.labels = {1};
  data.num_classes = 2;
  Matrix w(2, 1, 0.0);
  w.at(1, 0) = std::log(3.0);
  // log 0.75
  CHECK(log_likelihood(w, data) == doctest::Approx(-0.2876820724517809).epsilon(1e-12));
}

TEST_CASE("log_likelihood: random instance matches per-datapoint summation oracle") {
  RngStream rng = derive_stream(7, StreamTag::kInstance);
  const Dataset data = random_dataset(10, 3, 5, rng);
  const Matrix w = random_matrix(5, 3, rng);
  double want = 0.0;
  for (int i = 0; i < data.size(); ++i) {
    const auto p = softmax(scores(w, data.inputs.row_span(i)));
    want += std::log(p[data.labels[i]]);
  }
  CHECK(std::abs(log_likelihood(w, data) - want) < 1e-10);
}

TEST_CASE("log_likelihood: invariant under adding a common row shift") {
  RngStream rng = derive_stream(9, StreamTag::kInstance);
  const Dataset data = random_dataset(12, 3, 7, rng);
  const Matrix w = random_matrix(7, 3, rng);
  Matrix shifted = w;
  const Matrix v = random_matrix(1, 3, rng);
  for (int c = 0; c < shifted.rows; ++c) {
    for (int j = 0; j < shifted.cols; ++j) shifted.at(c, j) += v.at(0, j);
  }
  CHECK(rel_err(log_likelihood(shifted, data), log_likelihood(w, data)) < 1e-9);
}

TEST_CASE("log_likelihood: concave along random parameter pairs") {
  RngStream rng = derive_stream(13, StreamTag::kInstance);
  const Dataset data = random_dataset(15, 3, 6, rng);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix a = random_matrix(6, 3, rng);
    const Matrix b = random_matrix(6, 3, rng);
    const double la = log_likelihood(a, data);
    const double lb = log_likelihood(b, data);
    for (double t : {0.25, 0.5, 0.75}) {
      Matrix mid(6, 3);
      for (std::size_t i = 0; i < mid.data.size(); ++i) {
        mid.data[i] = t * a.data[i] + (1.0 - t) * b.data[i];
      }
      CHECK(log_likelihood(mid, data) >= t * la + (1.0 - t) * lb - 1e-9);
    }
  }
}

TEST_CASE("gamma_exact: confident correct model has zero gradient weights") {
  Matrix w(3, 1, 0.0);
  w.at(1, 0) = 900.0;  // p(1 | x) rounds to exactly 1 at f64
  const std::vector<double> x = {1.0};
  for (double g : gamma_exact(w, x, 1)) CHECK(g == 0.0);
}

TEST_CASE("gamma_exact: uniform model, C=4, label 2") {
  const Matrix w(4, 2, 0.0);
  const std::vector<double> x = {1.0, -1.0};
  const auto g = gamma_exact(w, x, 2);
  CHECK(g[0] == doctest::Approx(-0.25).epsilon(1e-12));
  CHECK(g[1] == doctest::Approx(-0.25).epsilon(1e-12));
  CHECK(g[2] == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(g[3] == doctest::Approx(-0.25).epsilon(1e-12));
}

TEST_CASE("gamma_exact: bounded in [-1,1] and sums to zero") {
  RngStream rng = derive_stream(31, StreamTag::kInstance);
  for (int trial = 0; trial < 100; ++trial) {
    const int c = 2 + static_cast<int>(rng.next_index(20));
    const int d = 1 + static_cast<int>(rng.next_index(5));
    const Matrix w = random_matrix(c, d, rng, 2.0);
    const Matrix x = random_matrix(1, d, rng);
    const ClassId label = static_cast<ClassId>(rng.next_index(c));
    const auto g = gamma_exact(w, x.row_span(0), label);
    double sum = 0.0;
    for (double v : g) {
      CHECK(v >= -1.0);
      CHECK(v <= 1.0);
      sum += v;
    }
    CHECK(std::abs(sum) < 1e-12);
  }
}

TEST_CASE("gradient_exact: perfectly predicting model gives the zero matrix") {
  Dataset data;
  data.inputs = Matrix(3, 1, 1.0);
  data.labels = {0, 0, 0};
  data.num_classes = 2;
  Matrix w(2, 1, 0.0);
  w.at(0, 0) = 900.0;
  const auto g = gradient_exact(w, data, all_indices(3));
  for (double v : g.values) CHECK(v == 0.0);
}

TEST_CASE("gradient_exact: uniform model, single datapoint, hand values") {
  Dataset data;
  data.inputs = Matrix(1, 1, 2.0);
  data.labels = {0};
  data.num_classes = 2;
  const Matrix w(2, 1, 0.0);
  const auto g = gradient_exact(w, data, all_indices(1));
  // gamma = (0.5, -0.5), x = (2)
  CHECK(g.values[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(g.values[1] == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(g.op_count == 2);
}

TEST_CASE("gradient_exact: op count is |M| * C") {
  RngStream rng = derive_stream(17, StreamTag::kInstance);
  const Dataset data = random_dataset(20, 3, 11, rng);
  const Matrix w = random_matrix(11, 3, rng);
  const std::vector<int> mb = {0, 5, 7, 19};
  CHECK(gradient_exact(w, data, mb).op_count == 4 * 11);
}

TEST_CASE("gradient_exact: matches central finite differences of the log likelihood") {
  for (std::uint64_t seed = 7; seed < 27; ++seed) {
    RngStream rng = derive_stream(seed, StreamTag::kInstance);
    const int c = 3 + static_cast<int>(rng.next_index(18));
    const int d = 1 + static_cast<int>(rng.next_index(5));
    const Dataset data = random_dataset(8, d, c, rng);
    const Matrix w = random_matrix(c, d, rng);
    const auto mb = all_indices(data.size());
    const auto g = gradient_exact(w, data, mb);
    const Matrix dir = random_matrix(c, d, rng);
    const double fd = central_difference(
        [&](const Matrix& p) { return log_likelihood(p, data, mb); }, w, dir, 1e-5);
    CHECK(rel_err(gradient_dot(g, dir), fd) < 1e-6);
  }
}
