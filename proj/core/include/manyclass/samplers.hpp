#pragma once

#include <span>
#include <vector>

#include "manyclass/rng.hpp"
#include "manyclass/types.hpp"

namespace manyclass {

// Smoothed empirical class frequencies over the whole training set.
// f(c) = (count(c) + smoothing) / (N + smoothing * C); strictly positive.
struct FrequencyTable {
  std::vector<std::int64_t> counts;
  std::vector<double> f;
  int num_classes = 0;
};

FrequencyTable build_frequency_table(std::span<const ClassId> labels, int num_classes,
                                     double smoothing = 1.0);

// Solves sum_{c not excluded} f(c)^alpha = target for alpha >= 0 by bisection.
// The sum is strictly decreasing in alpha since every f(c) < 1.
double solve_alpha_exponent(const FrequencyTable& freq, std::span<const ClassId> excluded,
                            double target);

// Per-class inclusion probabilities b_c = f(c)^alpha with
// sum_{c not excluded} b_c = expected_draws. Excluded classes carry b = 0.
struct BernoulliConfig {
  double expected_draws = 0.0;
  double alpha = 0.0;
  std::vector<double> b;
};

BernoulliConfig make_bernoulli_config(const FrequencyTable& freq,
                                      std::span<const ClassId> excluded,
                                      double expected_draws);

// Proposal for importance draws: q over the allowed classes (0 on excluded),
// normalised to 1, with its prefix-sum table for inversion sampling.
struct ImportanceConfig {
  int num_draws = 0;  // S
  std::vector<double> q;
  std::vector<double> cdf;
};

ImportanceConfig make_importance_config(std::span<const double> proposal_weights,
                                        std::span<const ClassId> excluded, int num_draws);
ImportanceConfig make_importance_config(const FrequencyTable& freq,
                                        std::span<const ClassId> excluded, int num_draws);

// Sampled negative classes with their inverse-inclusion weights kappa.
// Importance draws form a multiset (repeats allowed); Bernoulli draws are a
// set in ascending class order.
struct NegativeDraw {
  std::vector<ClassId> classes;
  std::vector<double> kappa;

  std::size_t size() const { return classes.size(); }
};

// Includes each class with b_c independently; kappa = 1/b_c.
NegativeDraw bernoulli_draw(const BernoulliConfig& cfg, RngStream& rng);

// S i.i.d. draws from q; kappa = 1/(S q(d)) per draw.
NegativeDraw importance_draw(const ImportanceConfig& cfg, RngStream& rng);

// Unbiased estimators of Z = sum_i z_i for a nonnegative value vector.
double estimate_z_importance(std::span<const double> z, const ImportanceConfig& cfg,
                             RngStream& rng);
double estimate_z_bernoulli(std::span<const double> z, std::span<const double> b,
                            RngStream& rng);

// Analytic estimator variances for a fixed value vector:
//   importance: (1/S) (sum_c z_c^2 / q_c - Z^2)
//   bernoulli:  sum_c (1/b_c - 1) z_c^2
double importance_variance(std::span<const double> z, std::span<const double> q,
                           int num_draws);
double bernoulli_variance(std::span<const double> z, std::span<const double> b);

}  // namespace manyclass
