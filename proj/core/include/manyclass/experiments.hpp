#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "manyclass/estimators.hpp"
#include "manyclass/trainer.hpp"
#include "manyclass/types.hpp"

namespace manyclass {

// Realisable synthetic problem: inputs and true weights i.i.d. standard
// normal, labels drawn from the exact softmax at the true weights.
struct SyntheticProblem {
  Matrix true_weights;
  Dataset data;
  std::uint64_t gen_seed = 0;
};

SyntheticProblem generate_synthetic(int n, int dim, int num_classes, std::uint64_t seed);

// Metric values of exactly 0 are reported as log(kMetricFloor) so CSV output
// stays numeric.
inline constexpr double kMetricFloor = 1e-300;
double log_metric_floor();

// log mean absolute difference in class probability predictions over the
// inputs, against the true model.
double bias_metric(const Matrix& params, const Matrix& true_params, const Matrix& inputs);

// log mean absolute entrywise parameter difference.
double param_diff_metric(const Matrix& a, const Matrix& b);

struct MethodSpec {
  std::string tag;  // label used in the CSV method column
  EstimatorConfig estimator;
  std::optional<double> learning_rate;  // unset: default, or searched for
                                        // ranking/blackout
};

struct ComparisonOptions {
  bool measure_wallclock = false;
  // Halving grid for the largest-non-divergent learning-rate search applied
  // to ranking and blackout runs without a pinned rate.
  std::vector<double> lr_search_grid = {0.32,  0.16,  0.08,   0.04,    0.02,
                                        0.01,  0.005, 0.0025, 0.00125, 0.000625};
  double divergence_bound = 1e8;  // max |param| treated as divergence in probes
};

struct MethodTrace {
  std::string tag;
  MetricsTrace trace;
  double learning_rate = 0.0;
};

struct ComparisonResult {
  std::vector<MethodTrace> methods;
};

// Runs every method from identical zero initialization over identical
// minibatch schedules. Each trace records the exact log likelihood, the bias
// against the true model, the parameter difference against the exact-gradient
// reference run, and the cumulative op count. An exact reference run is added
// when the method list does not contain one.
ComparisonResult run_comparison(const SyntheticProblem& problem,
                                std::vector<MethodSpec> methods, const TrainerConfig& cfg,
                                const ComparisonOptions& opt = {});

// Ranking traces for each alpha plus the exact-gradient reference trace.
ComparisonResult run_alpha_sweep(const SyntheticProblem& problem,
                                 std::span<const double> alphas,
                                 const EstimatorConfig& ranking_base,
                                 const TrainerConfig& cfg, const ComparisonOptions& opt = {});

std::string ranking_sweep_tag(double alpha);

// Matched-compute estimator variance study: uniform proposal q, uniform
// inclusion probabilities b = S/C with S = round(fraction * C), one fixed z
// vector, `trials` independent estimates per estimator.
struct VarianceStudyConfig {
  int num_classes = 1000;
  double compute_fraction = 0.05;  // f in (0, 1]
  std::int64_t trials = 20000;
  std::uint64_t seed = 1;
  // z entries are i.i.d. two-point: z_scale with probability z_sparsity, else
  // 0. Mimics the score profile of a trained model where most classes carry
  // negligible mass.
  double z_sparsity = 0.02;
  double z_scale = 1.0;
};

struct VarianceStudyRow {
  std::string estimator;
  double empirical_variance = 0.0;
  double closed_form_variance = 0.0;
  double empirical_mean = 0.0;
  double exact_z = 0.0;
};

std::vector<VarianceStudyRow> run_variance_study(const VarianceStudyConfig& cfg);

}  // namespace manyclass
