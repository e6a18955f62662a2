#include <benchmark/benchmark.h>

#include <vector>

#include "manyclass/estimators.hpp"
#include "manyclass/experiments.hpp"
#include "manyclass/model.hpp"
#include "manyclass/samplers.hpp"
#include "manyclass/trainer.hpp"

namespace {

using namespace manyclass;

const SyntheticProblem& desk_problem() {
  static const SyntheticProblem prob = generate_synthetic(2000, 100, 1000, 7);
  return prob;
}

Matrix warm_params() {
  Matrix w(1000, 100, 0.0);
  RngStream rng = derive_stream(11, StreamTag::kInstance);
  for (double& v : w.data) v = 0.05 * rng.next_gaussian();
  return w;
}

void BM_Scores(benchmark::State& state) {
  const auto& prob = desk_problem();
  const Matrix w = warm_params();
  std::vector<double> out(prob.data.num_classes);
  for (auto _ : state) {
    scores(w, prob.data.inputs.row_span(0), out);
    benchmark::DoNotOptimize(out.data());
  }
}
BENCHMARK(BM_Scores);

void BM_GradientExactMinibatch(benchmark::State& state) {
  const auto& prob = desk_problem();
  const Matrix w = warm_params();
  const std::vector<int> mb = minibatch_schedule(prob.data.size(), 50, 7, 0);
  for (auto _ : state) {
    SparseGradient g = gradient_exact(w, prob.data, mb);
    benchmark::DoNotOptimize(g.values.data());
  }
}
BENCHMARK(BM_GradientExactMinibatch);

void BM_GradientSampled(benchmark::State& state) {
  const auto& prob = desk_problem();
  const Matrix w = warm_params();
  const std::vector<int> mb = minibatch_schedule(prob.data.size(), 50, 7, 0);
  EstimatorConfig cfg;
  cfg.method = state.range(0) == 0 ? Method::kSampledBernoulli : Method::kSampledImportance;
  EstimatorContext ctx(prob.data, cfg);
  std::int64_t it = 0;
  for (auto _ : state) {
    const DrawSet draws = ctx.draw(mb, 7, it++);
    SparseGradient g = ctx.minibatch_gradient(w, mb, draws);
    benchmark::DoNotOptimize(g.values.data());
  }
}
BENCHMARK(BM_GradientSampled)->Arg(0)->Arg(1);

void BM_BernoulliDraw(benchmark::State& state) {
  const auto& prob = desk_problem();
  const FrequencyTable freq = build_frequency_table(prob.data.labels, 1000, 1.0);
  const std::vector<ClassId> excl = {0};
  const BernoulliConfig cfg = make_bernoulli_config(freq, excl, 20.0);
  RngStream rng = derive_stream(3, StreamTag::kNegatives);
  for (auto _ : state) {
    NegativeDraw d = bernoulli_draw(cfg, rng);
    benchmark::DoNotOptimize(d.classes.data());
  }
}
BENCHMARK(BM_BernoulliDraw);

void BM_ImportanceDraw(benchmark::State& state) {
  const auto& prob = desk_problem();
  const FrequencyTable freq = build_frequency_table(prob.data.labels, 1000, 1.0);
  const std::vector<ClassId> excl = {0};
  const ImportanceConfig cfg = make_importance_config(freq, excl, 20);
  RngStream rng = derive_stream(3, StreamTag::kNegatives);
  for (auto _ : state) {
    NegativeDraw d = importance_draw(cfg, rng);
    benchmark::DoNotOptimize(d.classes.data());
  }
}
BENCHMARK(BM_ImportanceDraw);

void BM_ExactLogLikelihood(benchmark::State& state) {
  const auto& prob = desk_problem();
  const Matrix w = warm_params();
  for (auto _ : state) {
    const double ll = log_likelihood(w, prob.data);
    benchmark::DoNotOptimize(ll);
  }
}
BENCHMARK(BM_ExactLogLikelihood);

void BM_SgaStepDense(benchmark::State& state) {
  const auto& prob = desk_problem();
  Matrix w = warm_params();
  const std::vector<int> mb = minibatch_schedule(prob.data.size(), 50, 7, 0);
  SparseGradient g = gradient_exact(w, prob.data, mb);
  TrainerConfig cfg;
  OptimizerState st{Matrix(w.rows, w.cols, 0.0), 0};
  for (auto _ : state) {
    sga_step(w, st, g, cfg);
    benchmark::DoNotOptimize(w.data.data());
  }
}
BENCHMARK(BM_SgaStepDense);

}  // namespace

BENCHMARK_MAIN();
