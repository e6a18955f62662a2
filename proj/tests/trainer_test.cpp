#include <stdexcept>
#include <cmath>
#include <limits>
#include <set>

#include "doctest.h"
#include "manyclass/trainer.hpp"
#include "test_util.hpp"

using namespace manyclass;
using namespace testutil;

namespace {

SparseGradient constant_gradient(int num_classes, int dim, double value) {
  SparseGradient g;
  g.dim = dim;
  g.dense = true;
  g.classes.resize(num_classes);
  std::iota(g.classes.begin(), g.classes.end(), 0);
  g.values.assign(static_cast<std::size_t>(num_classes) * dim, value);
  return g;
}

}  // namespace

TEST_CASE("sga_step: plain ascent without momentum") {
  Matrix params(2, 2, 1.0);
  OptimizerState st{Matrix(2, 2, 0.0), 0};
  TrainerConfig cfg;
  cfg.momentum = 0.0;
  cfg.learning_rate = 0.1;
  sga_step(params, st, constant_gradient(2, 2, 3.0), cfg);
  for (double v : params.data) CHECK(v == doctest::Approx(1.3).epsilon(1e-15));
  CHECK(st.iteration == 1);
}

TEST_CASE("sga_step: zero gradient and zero velocity leave the parameters alone") {
  Matrix params(3, 2, 0.7);
  OptimizerState st{Matrix(3, 2, 0.0), 0};
  TrainerConfig cfg;
  sga_step(params, st, constant_gradient(3, 2, 0.0), cfg);
  for (double v : params.data) CHECK(v == 0.7);
}

TEST_CASE("sga_step: two-step momentum recursion") {
  Matrix params(1, 1, 0.0);
  OptimizerState st{Matrix(1, 1, 0.0), 0};
  TrainerConfig cfg;
  cfg.momentum = 0.5;
  cfg.learning_rate = 1.0;
  const auto g = constant_gradient(1, 1, 2.0);
  sga_step(params, st, g, cfg);
  CHECK(st.velocity.at(0, 0) == doctest::Approx(2.0));       // v1 = g
  CHECK(params.at(0, 0) == doctest::Approx(2.0));            // + v1
  sga_step(params, st, g, cfg);
  CHECK(st.velocity.at(0, 0) == doctest::Approx(3.0));       // v2 = 1.5 g
  CHECK(params.at(0, 0) == doctest::Approx(5.0));            // cumulative g + 1.5 g
}

TEST_CASE("sga_step: sparse gradients decay every velocity row but move only touched rows") {
  Matrix params(3, 1, 0.0);
  OptimizerState st{Matrix(3, 1, 0.0), 0};
  st.velocity.at(0, 0) = 1.0;
  st.velocity.at(1, 0) = 1.0;
  st.velocity.at(2, 0) = 1.0;
  TrainerConfig cfg;
  cfg.momentum = 0.5;
  cfg.learning_rate = 1.0;
  SparseGradient g;
  g.dim = 1;
  g.classes = {1};
  g.values = {0.25};
  sga_step(params, st, g, cfg);
  CHECK(st.velocity.at(0, 0) == doctest::Approx(0.5));
  CHECK(st.velocity.at(1, 0) == doctest::Approx(0.75));
  CHECK(st.velocity.at(2, 0) == doctest::Approx(0.5));
  CHECK(params.at(0, 0) == 0.0);  // untouched rows do not move
  CHECK(params.at(1, 0) == doctest::Approx(0.75));
  CHECK(params.at(2, 0) == 0.0);
}

TEST_CASE("sga_step: velocity decays at rate momentum^t under empty gradients") {
  Matrix params(1, 1, 0.0);
  OptimizerState st{Matrix(1, 1, 1.0), 0};
  TrainerConfig cfg;
  cfg.momentum = 0.9;
  SparseGradient empty;
  empty.dim = 1;
  for (int t = 1; t <= 5; ++t) {
    sga_step(params, st, empty, cfg);
    CHECK(st.velocity.at(0, 0) == doctest::Approx(std::pow(0.9, t)).epsilon(1e-12));
  }
}

TEST_CASE("sga_step: non-finite gradient aborts") {
  Matrix params(1, 1, 0.0);
  OptimizerState st{Matrix(1, 1, 0.0), 0};
  TrainerConfig cfg;
  auto g = constant_gradient(1, 1, 0.0);
  g.values[0] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(sga_step(params, st, g, cfg), std::runtime_error);
}

TEST_CASE("minibatch_schedule: full batch covers every index") {
  const auto idx = minibatch_schedule(10, 10, 3, 0);
  CHECK(std::set<int>(idx.begin(), idx.end()).size() == 10);
}

TEST_CASE("minibatch_schedule: deterministic per (seed, iteration)") {
  CHECK(minibatch_schedule(57, 8, 7, 12) == minibatch_schedule(57, 8, 7, 12));
  CHECK(minibatch_schedule(57, 8, 7, 12) != minibatch_schedule(57, 8, 8, 12));
}

TEST_CASE("minibatch_schedule: one epoch is a partition with a ragged tail") {
  const int n = 101, batch = 10;
  std::set<int> seen;
  std::size_t total = 0;
  for (int it = 0; it < 11; ++it) {
    const auto idx = minibatch_schedule(n, batch, 7, it);
    if (it < 10) {
      CHECK(idx.size() == 10);
    } else {
      CHECK(idx.size() == 1);  // ragged final batch kept
    }
    total += idx.size();
    seen.insert(idx.begin(), idx.end());
  }
  CHECK(total == static_cast<std::size_t>(n));
  CHECK(seen.size() == static_cast<std::size_t>(n));  // every index exactly once
}

TEST_CASE("train: exact full-batch ascent on the concave objective never decreases") {
  RngStream rng = derive_stream(25, StreamTag::kInstance);
  const Dataset data = random_dataset(30, 3, 5, rng);
  EstimatorConfig est;  // exact
  TrainerConfig cfg;
  cfg.learning_rate = 0.005;
  cfg.momentum = 0.0;
  cfg.minibatch_size = data.size();
  cfg.iterations = 200;
  cfg.eval_every = 1;
  std::vector<double> lls;
  const EvalHook hook = [&](std::int64_t it, const Matrix& params, OpCount) {
    MetricsRecord rec;
    rec.iteration = it;
    rec.exact_ll = log_likelihood(params, data);
    lls.push_back(rec.exact_ll);
    return rec;
  };
  const auto trace = train(data, Matrix(5, 3, 0.0), est, cfg, hook);
  CHECK(!trace.diverged);
  REQUIRE(lls.size() == 201);
  for (std::size_t i = 1; i < lls.size(); ++i) CHECK(lls[i] >= lls[i - 1] - 1e-9);
}

TEST_CASE("train: identical seeds give bitwise-identical traces") {
  RngStream rng = derive_stream(26, StreamTag::kInstance);
  const Dataset data = random_dataset(24, 2, 6, rng);
  EstimatorConfig est;
  est.method = Method::kSampledBernoulli;
  est.num_negatives = 3;
  TrainerConfig cfg;
  cfg.minibatch_size = 8;
  cfg.iterations = 40;
  cfg.eval_every = 5;
  cfg.learning_rate = 0.05;
  const EvalHook hook = [&](std::int64_t it, const Matrix& params, OpCount ops) {
    MetricsRecord rec;
    rec.iteration = it;
    rec.op_count = ops;
    rec.exact_ll = log_likelihood(params, data);
    return rec;
  };
  const auto a = train(data, Matrix(6, 2, 0.0), est, cfg, hook);
  const auto b = train(data, Matrix(6, 2, 0.0), est, cfg, hook);
  REQUIRE(a.records.size() == b.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    CHECK(a.records[i].exact_ll == b.records[i].exact_ll);  // bitwise equality
    CHECK(a.records[i].op_count == b.records[i].op_count);
  }
}

TEST_CASE("train: zero iterations leave only the initial evaluation") {
  RngStream rng = derive_stream(27, StreamTag::kInstance);
  const Dataset data = random_dataset(10, 2, 4, rng);
  EstimatorConfig est;
  TrainerConfig cfg;
  cfg.iterations = 0;
  cfg.minibatch_size = 5;
  int calls = 0;
  const EvalHook hook = [&](std::int64_t it, const Matrix&, OpCount) {
    ++calls;
    MetricsRecord rec;
    rec.iteration = it;
    return rec;
  };
  const auto trace = train(data, Matrix(4, 2, 0.0), est, cfg, hook);
  CHECK(calls == 1);
  REQUIRE(trace.records.size() == 1);
  CHECK(trace.records[0].iteration == 0);
}

TEST_CASE("train: op accounting matches the estimator budget") {
  RngStream rng = derive_stream(28, StreamTag::kInstance);
  const Dataset data = random_dataset(40, 2, 30, rng);
  EstimatorConfig est;
  est.method = Method::kSampledImportance;
  est.num_negatives = 20;
  TrainerConfig cfg;
  cfg.minibatch_size = 10;
  cfg.iterations = 8;
  cfg.eval_every = 8;
  OpCount final_ops = 0;
  const EvalHook hook = [&](std::int64_t it, const Matrix&, OpCount ops) {
    final_ops = ops;
    MetricsRecord rec;
    rec.iteration = it;
    rec.op_count = ops;
    return rec;
  };
  train(data, Matrix(30, 2, 0.0), est, cfg, hook);
  CHECK(final_ops == 8 * 10 * 21);  // iterations * |M| * (1 + K)
}
