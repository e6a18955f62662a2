#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "manyclass/estimators.hpp"
#include "manyclass/types.hpp"

namespace manyclass {

struct TrainerConfig {
  double learning_rate = 0.02;
  double momentum = 0.99;
  int minibatch_size = 50;
  std::int64_t iterations = 1000;
  std::uint64_t seed = 1;
  std::int64_t eval_every = 10;

  void validate(int data_size) const;  // throws std::invalid_argument
};

struct OptimizerState {
  Matrix velocity;
  std::int64_t iteration = 0;
};

// One ascent step with classical momentum:
//   velocity <- momentum * velocity + gradient   (all rows decay)
//   params   <- params + learning_rate * velocity (touched rows only)
// Throws std::runtime_error on a non-finite gradient.
void sga_step(Matrix& params, OptimizerState& state, const SparseGradient& grad,
              const TrainerConfig& cfg);

// Deterministic epoch-wise shuffled partition; the last ragged batch is kept.
std::vector<int> minibatch_schedule(int data_size, int minibatch_size, std::uint64_t seed,
                                    std::int64_t iteration);

struct MetricsRecord {
  std::int64_t iteration = 0;
  std::string method;
  double exact_ll = 0.0;
  double bias = 0.0;
  double param_diff = 0.0;
  OpCount op_count = 0;
  std::int64_t wallclock_ms = 0;
};

struct MetricsTrace {
  std::vector<MetricsRecord> records;
  bool diverged = false;
  std::int64_t degenerate_draws = 0;
  double learning_rate_used = 0.0;
};

// Called at iteration 0, every eval_every iterations and at the final
// iteration. Receives the current parameters and the cumulative count of
// score evaluations spent on training (instrumentation is not counted).
using EvalHook = std::function<MetricsRecord(std::int64_t iteration, const Matrix& params,
                                             OpCount op_count)>;

// Minibatch stochastic gradient ascent. Deterministic given the seed and
// configs. On divergence (non-finite gradient or parameters) the trace is
// truncated and flagged.
MetricsTrace train(const Dataset& data, Matrix init_params, const EstimatorConfig& est_cfg,
                   const TrainerConfig& cfg, const EvalHook& hook = nullptr);

}  // namespace manyclass
