#include "manyclass/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "manyclass/rng.hpp"

namespace manyclass {

void TrainerConfig::validate(int data_size) const {
  if (!(learning_rate > 0.0)) {
    throw std::invalid_argument("trainer config: learning rate must be > 0");
  }
  if (!(momentum >= 0.0 && momentum < 1.0)) {
    throw std::invalid_argument("trainer config: momentum must lie in [0, 1)");
  }
  if (minibatch_size < 1 || minibatch_size > data_size) {
    throw std::invalid_argument("trainer config: minibatch size must lie in [1, N]");
  }
  if (iterations < 0) throw std::invalid_argument("trainer config: iterations must be >= 0");
  if (eval_every < 1) throw std::invalid_argument("trainer config: eval_every must be >= 1");
}

void sga_step(Matrix& params, OptimizerState& state, const SparseGradient& grad,
              const TrainerConfig& cfg) {
  if (!state.velocity.same_shape(params)) {
    throw std::invalid_argument("sga_step: velocity shape does not match parameters");
  }
  if (grad.dim != params.cols) {
    throw std::invalid_argument("sga_step: gradient dimension mismatch");
  }
  if (!grad.all_finite()) {
    throw std::runtime_error("sga_step: non-finite gradient");
  }
  // all velocity rows decay; only touched rows receive gradient and move
  for (double& v : state.velocity.data) v *= cfg.momentum;
  for (std::size_t i = 0; i < grad.size(); ++i) {
    const ClassId c = grad.classes[i];
    if (c < 0 || c >= params.rows) throw std::invalid_argument("sga_step: class out of range");
    double* vrow = state.velocity.row(c);
    double* prow = params.row(c);
    const double* grow = grad.row(i);
    for (int j = 0; j < grad.dim; ++j) {
      vrow[j] += grow[j];
      prow[j] += cfg.learning_rate * vrow[j];
    }
  }
  ++state.iteration;
}

std::vector<int> minibatch_schedule(int data_size, int minibatch_size, std::uint64_t seed,
                                    std::int64_t iteration) {
  if (data_size < 1 || minibatch_size < 1 || minibatch_size > data_size) {
    throw std::invalid_argument("minibatch_schedule: bad sizes");
  }
  if (iteration < 0) throw std::invalid_argument("minibatch_schedule: iteration must be >= 0");
  const std::int64_t per_epoch = (data_size + minibatch_size - 1) / minibatch_size;
  const std::int64_t epoch = iteration / per_epoch;
  const std::int64_t pos = iteration % per_epoch;

  std::vector<int> perm(data_size);
  std::iota(perm.begin(), perm.end(), 0);
  RngStream rng = derive_stream(seed, StreamTag::kShuffle, static_cast<std::uint64_t>(epoch));
  for (int i = data_size - 1; i > 0; --i) {
    const std::size_t j = rng.next_index(static_cast<std::size_t>(i) + 1);
    std::swap(perm[i], perm[j]);
  }
  const std::int64_t lo = pos * minibatch_size;
  const std::int64_t hi = std::min<std::int64_t>(data_size, lo + minibatch_size);
  return std::vector<int>(perm.begin() + lo, perm.begin() + hi);
}

MetricsTrace train(const Dataset& data, Matrix init_params, const EstimatorConfig& est_cfg,
                   const TrainerConfig& cfg, const EvalHook& hook) {
  data.validate();
  cfg.validate(data.size());
  if (init_params.rows != data.num_classes || init_params.cols != data.dim()) {
    throw std::invalid_argument("train: initial parameter shape does not match dataset");
  }
  EstimatorContext estimator(data, est_cfg);
  Matrix params = std::move(init_params);
  OptimizerState state{Matrix(params.rows, params.cols, 0.0), 0};

  MetricsTrace trace;
  trace.learning_rate_used = cfg.learning_rate;
  OpCount ops = 0;
  const auto eval = [&](std::int64_t iteration) {
    if (hook) trace.records.push_back(hook(iteration, params, ops));
  };

  eval(0);
  for (std::int64_t it = 0; it < cfg.iterations; ++it) {
    const std::vector<int> minibatch =
        minibatch_schedule(data.size(), cfg.minibatch_size, cfg.seed, it);
    const DrawSet draws = estimator.draw(minibatch, cfg.seed, it);
    trace.degenerate_draws += draws.degenerate;
    const SparseGradient grad = estimator.minibatch_gradient(params, minibatch, draws);
    ops += grad.op_count;
    if (!grad.all_finite()) {
      trace.diverged = true;
      break;
    }
    sga_step(params, state, grad, cfg);
    bool finite = true;
    for (std::size_t i = 0; i < grad.size() && finite; ++i) {
      const double* row = params.row(grad.classes[i]);
      for (int j = 0; j < params.cols; ++j) {
        if (!std::isfinite(row[j])) {
          finite = false;
          break;
        }
      }
    }
    if (!finite) {
      trace.diverged = true;
      break;
    }
    if ((it + 1) % cfg.eval_every == 0 || it + 1 == cfg.iterations) eval(it + 1);
  }
  return trace;
}

}  // namespace manyclass
