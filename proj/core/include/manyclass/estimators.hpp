#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "manyclass/model.hpp"
#include "manyclass/samplers.hpp"
#include "manyclass/types.hpp"

namespace manyclass {

enum class Method {
  kExact,
  kSampledBernoulli,
  kSampledImportance,
  kRanking,
  kNce,
  kNegativeSampling,
  kBlackout,
};

std::string_view method_name(Method m);
std::optional<Method> parse_method(std::string_view name);
std::span<const Method> all_methods();

enum class PositiveSetMode { kOwnLabelOnly, kMinibatchLabelsShared };
enum class NegativeSetMode { kPerDatapoint, kSharedAcrossMinibatch };

struct EstimatorConfig {
  Method method = Method::kExact;
  int num_negatives = 20;  // K: negatives (or noise samples) per datapoint
  PositiveSetMode positive_set_mode = PositiveSetMode::kOwnLabelOnly;
  NegativeSetMode negative_set_mode = NegativeSetMode::kPerDatapoint;
  std::optional<double> ranking_alpha;  // unset: log(C - 1)
  double nce_noise_power = 1.0;         // noise distribution ~ f(c)^power
  double blackout_power = 1.0;          // proposal Q(c) ~ f(c)^power
  double nce_normalizer = 1.0;          // the fixed per-datapoint z_m
  double freq_smoothing = 1.0;

  void validate(int num_classes) const;  // throws std::invalid_argument
};

// Classes handled explicitly (positives, containing the label) plus sampled
// negatives with kappa weights for one datapoint. Positives and negatives are
// disjoint. `degenerate` marks an empty negative draw, in which case the
// normalisation falls back to the positives alone.
struct SampledSet {
  ClassId label = 0;
  std::vector<ClassId> positives;
  NegativeDraw negatives;
  bool degenerate = false;
};

// log of Z~ = sum_{c in positives} u(c,x) + sum_{d in negatives} kappa_d u(d,x),
// computed with a max shift. Adds |positives| + |negatives| to *ops.
double log_z_tilde(const Matrix& weights, std::span<const double> x, const SampledSet& set,
                   OpCount* ops = nullptr);
double z_tilde(const Matrix& weights, std::span<const double> x, const SampledSet& set,
               OpCount* ops = nullptr);

// The distribution p~ over the sampled class set: u/Z~ on positives and
// kappa u/Z~ on negatives, aggregated per class (repeated importance draws of
// a class merge into one entry). Sums to 1.
struct PTilde {
  std::vector<ClassId> classes;  // positives first, then negatives
  std::vector<double> p;
  std::size_t num_positives = 0;

  double mass_of(ClassId c) const;  // 0 when c is not in the set
};

PTilde p_tilde(const Matrix& weights, std::span<const double> x, const SampledSet& set);

// --- minibatch gradients -------------------------------------------------
//
// Each function takes the draws explicitly so tests can pin them; the
// EstimatorContext below performs the drawing during training. Every gradient
// is the exact derivative of the matching objective_* value.

SparseGradient gradient_sampled_likelihood(const Matrix& weights, const Dataset& data,
                                           std::span<const int> minibatch,
                                           std::span<const SampledSet> sets);

SparseGradient gradient_ranking(const Matrix& weights, const Dataset& data,
                                std::span<const int> minibatch,
                                std::span<const std::vector<ClassId>> negatives,
                                double alpha);

SparseGradient gradient_nce(const Matrix& weights, const Dataset& data,
                            std::span<const int> minibatch,
                            std::span<const std::vector<ClassId>> noise,
                            std::span<const double> noise_dist, double normalizer);

SparseGradient gradient_negative_sampling(const Matrix& weights, const Dataset& data,
                                          std::span<const int> minibatch,
                                          std::span<const std::vector<ClassId>> negatives);

SparseGradient gradient_blackout(const Matrix& weights, const Dataset& data,
                                 std::span<const int> minibatch,
                                 std::span<const double> proposal_q,
                                 std::span<const std::vector<ClassId>> negatives);

// --- objectives -----------------------------------------------------------

double objective_exact(const Matrix& weights, const Dataset& data,
                       std::span<const int> minibatch);
double objective_sampled_likelihood(const Matrix& weights, const Dataset& data,
                                    std::span<const int> minibatch,
                                    std::span<const SampledSet> sets);
double objective_ranking(const Matrix& weights, const Dataset& data,
                         std::span<const int> minibatch,
                         std::span<const std::vector<ClassId>> negatives, double alpha);
double objective_nce(const Matrix& weights, const Dataset& data,
                     std::span<const int> minibatch,
                     std::span<const std::vector<ClassId>> noise,
                     std::span<const double> noise_dist, double normalizer);
double objective_negative_sampling(const Matrix& weights, const Dataset& data,
                                   std::span<const int> minibatch,
                                   std::span<const std::vector<ClassId>> negatives);
double objective_blackout(const Matrix& weights, const Dataset& data,
                          std::span<const int> minibatch,
                          std::span<const double> proposal_q,
                          std::span<const std::vector<ClassId>> negatives);

// --- drawing + dispatch ----------------------------------------------------

// Draws for one minibatch, parallel to the minibatch slots.
struct DrawSet {
  std::vector<SampledSet> sampled;                 // sampled-* methods
  std::vector<std::vector<ClassId>> negatives;     // ranking / negative-sampling / blackout
  std::vector<std::vector<ClassId>> noise;         // nce
  std::int64_t degenerate = 0;
};

// Owns the frequency table and per-method sampling state for one training
// run. Drawing is deterministic given (seed, iteration, slot). Not thread
// safe: the Bernoulli alpha solves are memoised per excluded label.
class EstimatorContext {
 public:
  EstimatorContext(const Dataset& data, EstimatorConfig cfg);

  DrawSet draw(std::span<const int> minibatch, std::uint64_t seed, std::int64_t iteration);

  SparseGradient minibatch_gradient(const Matrix& weights, std::span<const int> minibatch,
                                    const DrawSet& draws) const;

  double objective(const Matrix& weights, std::span<const int> minibatch,
                   const DrawSet& draws) const;

  double ranking_alpha() const { return ranking_alpha_; }
  const FrequencyTable& frequencies() const { return freq_; }
  const EstimatorConfig& config() const { return cfg_; }

 private:
  const Dataset* data_;
  EstimatorConfig cfg_;
  FrequencyTable freq_;
  double ranking_alpha_ = 0.0;
  std::vector<double> noise_dist_;      // nce noise probabilities
  std::vector<double> noise_cdf_;
  std::vector<double> blackout_q_;      // blackout proposal Q over all classes
  std::vector<double> blackout_cdf_;
  std::vector<double> freq_cdf_;        // cdf of f for importance proposals
  std::unordered_map<ClassId, BernoulliConfig> bernoulli_cache_;

  std::vector<ClassId> positives_for(std::span<const int> minibatch, int slot) const;
  const BernoulliConfig& bernoulli_config_for(ClassId excluded_label);
  SampledSet draw_sampled_set(std::span<const int> minibatch, int slot,
                              std::span<const ClassId> positives, RngStream& rng);
};

// Convenience wrapper used by objective monitoring and tests.
double objective_value(Method method, const Matrix& weights, const Dataset& data,
                       std::span<const int> minibatch, const DrawSet& draws,
                       const EstimatorContext& ctx);

}  // namespace manyclass
