#include "manyclass/estimators.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

namespace manyclass {

namespace {

constexpr std::uint64_t kSharedDrawSalt = 0xffffffffULL;

double stable_sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

double log_sigmoid(double t) { return -softplus(-t); }

double dot_row(const Matrix& w, ClassId c, std::span<const double> x) {
  const double* row = w.row(c);
  double s = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) s += row[j] * x[j];
  return s;
}

void check_draw_size(std::size_t minibatch, std::size_t draws, const char* what) {
  if (minibatch != draws) {
    throw std::invalid_argument(std::string(what) + ": one draw per minibatch datapoint required");
  }
}

void check_shapes(const Matrix& w, const Dataset& data, const char* what) {
  if (w.rows != data.num_classes || w.cols != data.dim()) {
    throw std::invalid_argument(std::string(what) + ": weight shape does not match dataset");
  }
}

// Log-domain terms of Z~ for one datapoint: s(c) on positives and
// s(d) + log kappa_d on negative instances.
struct ZTerms {
  std::vector<double> log_terms;  // positives first, then negative instances
  double log_z = 0.0;
};

ZTerms z_terms(const Matrix& w, std::span<const double> x, const SampledSet& set,
               OpCount* ops) {
  if (set.positives.empty()) {
    throw std::invalid_argument("sampled set: positives must contain the label");
  }
  if (std::find(set.positives.begin(), set.positives.end(), set.label) ==
      set.positives.end()) {
    throw std::invalid_argument("sampled set: label missing from positives");
  }
  ZTerms t;
  t.log_terms.reserve(set.positives.size() + set.negatives.size());
  for (ClassId c : set.positives) t.log_terms.push_back(dot_row(w, c, x));
  for (std::size_t i = 0; i < set.negatives.size(); ++i) {
    const double kappa = set.negatives.kappa[i];
    if (!(kappa > 0.0)) throw std::invalid_argument("sampled set: kappa must be > 0");
    t.log_terms.push_back(dot_row(w, set.negatives.classes[i], x) + std::log(kappa));
  }
  if (ops) *ops += static_cast<OpCount>(set.positives.size() + set.negatives.size());
  t.log_z = log_sum_exp(t.log_terms);
  return t;
}

}  // namespace

std::string_view method_name(Method m) {
  switch (m) {
    case Method::kExact: return "exact";
    case Method::kSampledBernoulli: return "sampled-bernoulli";
    case Method::kSampledImportance: return "sampled-importance";
    case Method::kRanking: return "ranking";
    case Method::kNce: return "nce";
    case Method::kNegativeSampling: return "negative-sampling";
    case Method::kBlackout: return "blackout";
  }
  return "unknown";
}

std::span<const Method> all_methods() {
  static constexpr std::array<Method, 7> kAll = {
      Method::kExact,   Method::kSampledBernoulli, Method::kSampledImportance,
      Method::kRanking, Method::kNce,              Method::kNegativeSampling,
      Method::kBlackout};
  return kAll;
}

std::optional<Method> parse_method(std::string_view name) {
  for (Method m : all_methods()) {
    if (method_name(m) == name) return m;
  }
  return std::nullopt;
}

void EstimatorConfig::validate(int num_classes) const {
  if (method != Method::kExact) {
    if (num_negatives < 1) {
      throw std::invalid_argument("estimator config: sampled methods need K >= 1");
    }
    if (num_classes < 2) {
      throw std::invalid_argument("estimator config: sampled methods need >= 2 classes");
    }
  }
  if (ranking_alpha && !(*ranking_alpha > 0.0)) {
    throw std::invalid_argument("estimator config: ranking threshold must be > 0");
  }
  if (nce_noise_power < 0.0 || blackout_power < 0.0) {
    throw std::invalid_argument("estimator config: frequency powers must be >= 0");
  }
  if (!(nce_normalizer > 0.0)) {
    throw std::invalid_argument("estimator config: the fixed nce normaliser must be > 0");
  }
  if (freq_smoothing < 0.0) {
    throw std::invalid_argument("estimator config: smoothing must be >= 0");
  }
  if (negative_set_mode == NegativeSetMode::kSharedAcrossMinibatch &&
      positive_set_mode != PositiveSetMode::kMinibatchLabelsShared) {
    throw std::invalid_argument(
        "estimator config: shared negatives require minibatch-labels-shared positives so "
        "the draw can exclude every positive class");
  }
}

double log_z_tilde(const Matrix& weights, std::span<const double> x, const SampledSet& set,
                   OpCount* ops) {
  return z_terms(weights, x, set, ops).log_z;
}

double z_tilde(const Matrix& weights, std::span<const double> x, const SampledSet& set,
               OpCount* ops) {
  return std::exp(log_z_tilde(weights, x, set, ops));
}

double PTilde::mass_of(ClassId c) const {
  for (std::size_t i = 0; i < classes.size(); ++i) {
    if (classes[i] == c) return p[i];
  }
  return 0.0;
}

PTilde p_tilde(const Matrix& weights, std::span<const double> x, const SampledSet& set) {
  const ZTerms t = z_terms(weights, x, set, nullptr);
  PTilde out;
  out.num_positives = set.positives.size();
  out.classes = set.positives;
  out.p.resize(set.positives.size());
  for (std::size_t i = 0; i < set.positives.size(); ++i) {
    out.p[i] = std::exp(t.log_terms[i] - t.log_z);
  }
  // repeated importance draws of the same class merge into one entry
  for (std::size_t i = 0; i < set.negatives.size(); ++i) {
    const ClassId d = set.negatives.classes[i];
    const double mass = std::exp(t.log_terms[set.positives.size() + i] - t.log_z);
    bool merged = false;
    for (std::size_t j = out.num_positives; j < out.classes.size(); ++j) {
      if (out.classes[j] == d) {
        out.p[j] += mass;
        merged = true;
        break;
      }
    }
    if (!merged) {
      out.classes.push_back(d);
      out.p.push_back(mass);
    }
  }
  return out;
}

SparseGradient gradient_sampled_likelihood(const Matrix& weights, const Dataset& data,
                                           std::span<const int> minibatch,
                                           std::span<const SampledSet> sets) {
  check_shapes(weights, data, "gradient_sampled_likelihood");
  check_draw_size(minibatch.size(), sets.size(), "gradient_sampled_likelihood");
  GradientAccumulator acc(weights.cols);
  OpCount ops = 0;
  for (std::size_t i = 0; i < minibatch.size(); ++i) {
    const SampledSet& set = sets[i];
    const std::span<const double> x = data.inputs.row_span(minibatch[i]);
    if (set.label != data.labels[minibatch[i]]) {
      throw std::invalid_argument("gradient_sampled_likelihood: set label mismatch");
    }
    const ZTerms t = z_terms(weights, x, set, &ops);
    for (std::size_t j = 0; j < set.positives.size(); ++j) {
      const ClassId c = set.positives[j];
      const double gamma =
          (c == set.label ? 1.0 : 0.0) - std::exp(t.log_terms[j] - t.log_z);
      acc.add(c, gamma, x);
    }
    for (std::size_t j = 0; j < set.negatives.size(); ++j) {
      const double mass = std::exp(t.log_terms[set.positives.size() + j] - t.log_z);
      acc.add(set.negatives.classes[j], -mass, x);
    }
  }
  acc.add_ops(ops);
  return acc.take();
}

double objective_sampled_likelihood(const Matrix& weights, const Dataset& data,
                                    std::span<const int> minibatch,
                                    std::span<const SampledSet> sets) {
  check_shapes(weights, data, "objective_sampled_likelihood");
  check_draw_size(minibatch.size(), sets.size(), "objective_sampled_likelihood");
  double obj = 0.0;
  for (std::size_t i = 0; i < minibatch.size(); ++i) {
    const std::span<const double> x = data.inputs.row_span(minibatch[i]);
    const ZTerms t = z_terms(weights, x, sets[i], nullptr);
    obj += dot_row(weights, sets[i].label, x) - t.log_z;
  }
  return obj;
}

double objective_exact(const Matrix& weights, const Dataset& data,
                       std::span<const int> minibatch) {
  return log_likelihood(weights, data, minibatch);
}

SparseGradient gradient_ranking(const Matrix& weights, const Dataset& data,
                                std::span<const int> minibatch,
                                std::span<const std::vector<ClassId>> negatives,
                                double alpha) {
  check_shapes(weights, data, "gradient_ranking");
  check_draw_size(minibatch.size(), negatives.size(), "gradient_ranking");
  if (!(alpha >= 0.0)) throw std::invalid_argument("gradient_ranking: alpha must be >= 0");
  GradientAccumulator acc(weights.cols);
  for (std::size_t i = 0; i < minibatch.size(); ++i) {
    const auto& negs = negatives[i];
    if (negs.empty()) {
      throw std::invalid_argument("gradient_ranking: every datapoint needs >= 1 negative");
    }
    const std::span<const double> x = data.inputs.row_span(minibatch[i]);
    const ClassId label = data.labels[minibatch[i]];
    const double s_label = dot_row(weights, label, x);
    const double inv = 1.0 / static_cast<double>(negs.size());
    for (ClassId d : negs) {
      const double margin = s_label - dot_row(weights, d, x) - alpha;
      const double wgt = (1.0 - stable_sigmoid(margin)) * inv;
      acc.add(label, wgt, x);
      acc.add(d, -wgt, x);
    }
    acc.add_ops(1 + static_cast<OpCount>(negs.size()));
  }
  return acc.take();
}

double objective_ranking(const Matrix& weights, const Dataset& data,
                         std::span<const int> minibatch,
                         std::span<const std::vector<ClassId>> negatives, double alpha) {
  check_shapes(weights, data, "objective_ranking");
  check_draw_size(minibatch.size(), negatives.size(), "objective_ranking");
  double obj = 0.0;
  for (std::size_t i = 0; i < minibatch.size(); ++i) {
    const auto& negs = negatives[i];
    if (negs.empty()) {
      throw std::invalid_argument("objective_ranking: every datapoint needs >= 1 negative");
    }
    const std::span<const double> x = data.inputs.row_span(minibatch[i]);
    const double s_label = dot_row(weights, data.labels[minibatch[i]], x);
    const double inv = 1.0 / static_cast<double>(negs.size());
    for (ClassId d : negs) {
      obj += inv * log_sigmoid(s_label - dot_row(weights, d, x) - alpha);
    }
  }
  return obj;
}

SparseGradient gradient_nce(const Matrix& weights, const Dataset& data,
                            std::span<const int> minibatch,
                            std::span<const std::vector<ClassId>> noise,
                            std::span<const double> noise_dist, double normalizer) {
  check_shapes(weights, data, "gradient_nce");
  check_draw_size(minibatch.size(), noise.size(), "gradient_nce");
  if (static_cast<int>(noise_dist.size()) != data.num_classes) {
    throw std::invalid_argument("gradient_nce: noise distribution size mismatch");
  }
  if (!(normalizer > 0.0)) throw std::invalid_argument("gradient_nce: normalizer must be > 0");
  const double log_norm = std::log(normalizer);
  GradientAccumulator acc(weights.cols);
  for (std::size_t i = 0; i < minibatch.size(); ++i) {
    const auto& draws = noise[i];
    if (draws.empty()) {
      throw std::invalid_argument("gradient_nce: every datapoint needs >= 1 noise draw");
    }
    const std::span<const double> x = data.inputs.row_span(minibatch[i]);
    const ClassId label = data.labels[minibatch[i]];
    const double log_k = std::log(static_cast<double>(draws.size()));
    if (!(noise_dist[label] > 0.0)) {
      throw std::invalid_argument("gradient_nce: noise distribution must be positive");
    }
    // positive term: weight k p_n(c) / (p'(c) + k p_n(c))
    const double s_label = dot_row(weights, label, x) - log_norm;
    acc.add(label, stable_sigmoid(log_k + std::log(noise_dist[label]) - s_label), x);
    // each noise draw d: weight -p'(d) / (p'(d) + k p_n(d))
    for (ClassId d : draws) {
      if (!(noise_dist[d] > 0.0)) {
        throw std::invalid_argument("gradient_nce: noise distribution must be positive");
      }
      const double s_d = dot_row(weights, d, x) - log_norm;
      acc.add(d, -stable_sigmoid(s_d - log_k - std::log(noise_dist[d])), x);
    }
    acc.add_ops(1 + static_cast<OpCount>(draws.size()));
  }
  return acc.take();
}

double objective_nce(const Matrix& weights, const Dataset& data,
                     std::span<const int> minibatch,
                     std::span<const std::vector<ClassId>> noise,
                     std::span<const double> noise_dist, double normalizer) {
  check_shapes(weights, data, "objective_nce");
  check_draw_size(minibatch.size(), noise.size(), "objective_nce");
  const double log_norm = std::log(normalizer);
  double obj = 0.0;
  for (std::size_t i = 0; i < minibatch.size(); ++i) {
    const auto& draws = noise[i];
    const std::span<const double> x = data.inputs.row_span(minibatch[i]);
    const ClassId label = data.labels[minibatch[i]];
    const double log_k = std::log(static_cast<double>(draws.size()));
    const double s_label = dot_row(weights, label, x) - log_norm;
    obj += log_sigmoid(s_label - log_k - std::log(noise_dist[label]));
    for (ClassId d : draws) {
      const double s_d = dot_row(weights, d, x) - log_norm;
      obj += log_sigmoid(log_k + std::log(noise_dist[d]) - s_d);
    }
  }
  return obj;
}

SparseGradient gradient_negative_sampling(const Matrix& weights, const Dataset& data,
                                          std::span<const int> minibatch,
                                          std::span<const std::vector<ClassId>> negatives) {
  check_shapes(weights, data, "gradient_negative_sampling");
  check_draw_size(minibatch.size(), negatives.size(), "gradient_negative_sampling");
  GradientAccumulator acc(weights.cols);
  for (std::size_t i = 0; i < minibatch.size(); ++i) {
    const auto& negs = negatives[i];
    if (negs.empty()) {
      throw std::invalid_argument(
          "gradient_negative_sampling: every datapoint needs >= 1 negative");
    }
    const std::span<const double> x = data.inputs.row_span(minibatch[i]);
    const ClassId label = data.labels[minibatch[i]];
    acc.add(label, 1.0 - stable_sigmoid(dot_row(weights, label, x)), x);
    const double inv = 1.0 / static_cast<double>(negs.size());
    for (ClassId d : negs) {
      acc.add(d, -stable_sigmoid(dot_row(weights, d, x)) * inv, x);
    }
    acc.add_ops(1 + static_cast<OpCount>(negs.size()));
  }
  return acc.take();
}

double objective_negative_sampling(const Matrix& weights, const Dataset& data,
                                   std::span<const int> minibatch,
                                   std::span<const std::vector<ClassId>> negatives) {
  check_shapes(weights, data, "objective_negative_sampling");
  check_draw_size(minibatch.size(), negatives.size(), "objective_negative_sampling");
  double obj = 0.0;
  for (std::size_t i = 0; i < minibatch.size(); ++i) {
    const auto& negs = negatives[i];
    const std::span<const double> x = data.inputs.row_span(minibatch[i]);
    obj += log_sigmoid(dot_row(weights, data.labels[minibatch[i]], x));
    const double inv = 1.0 / static_cast<double>(negs.size());
    for (ClassId d : negs) obj += inv * log_sigmoid(-dot_row(weights, d, x));
  }
  return obj;
}

namespace {

// Shared scaffolding for the blackout objective and gradient: the weighted
// scores lambda_c = s(c,x) - log Q(c) for the label and the (deduplicated)
// negative classes, exponentiated under a common max shift.
struct BlackoutTerms {
  std::vector<ClassId> uniq;   // unique negative classes, first-appearance order
  std::vector<double> mult;    // multiplicities in the draw
  std::vector<double> t;       // shifted exp(lambda) per unique class
  double t_label = 0.0;
  double total = 0.0;          // sum of mult * t over negatives
};

BlackoutTerms blackout_terms(const Matrix& w, std::span<const double> x, ClassId label,
                             const std::vector<ClassId>& negs,
                             std::span<const double> proposal_q) {
  BlackoutTerms bt;
  for (ClassId d : negs) {
    if (d == label) {
      throw std::invalid_argument("blackout: negatives must exclude the label");
    }
    bool found = false;
    for (std::size_t j = 0; j < bt.uniq.size(); ++j) {
      if (bt.uniq[j] == d) {
        bt.mult[j] += 1.0;
        found = true;
        break;
      }
    }
    if (!found) {
      bt.uniq.push_back(d);
      bt.mult.push_back(1.0);
    }
  }
  const auto lambda_of = [&](ClassId c) {
    if (!(proposal_q[c] > 0.0)) {
      throw std::invalid_argument("blackout: proposal must be positive on sampled classes");
    }
    return dot_row(w, c, x) - std::log(proposal_q[c]);
  };
  std::vector<double> lam(bt.uniq.size());
  double shift = lambda_of(label);
  for (std::size_t j = 0; j < bt.uniq.size(); ++j) {
    lam[j] = lambda_of(bt.uniq[j]);
    shift = std::max(shift, lam[j]);
  }
  bt.t_label = std::exp(lambda_of(label) - shift);
  bt.t.resize(bt.uniq.size());
  for (std::size_t j = 0; j < bt.uniq.size(); ++j) {
    bt.t[j] = std::exp(lam[j] - shift);
    bt.total += bt.mult[j] * bt.t[j];
  }
  return bt;
}

}  // namespace

SparseGradient gradient_blackout(const Matrix& weights, const Dataset& data,
                                 std::span<const int> minibatch,
                                 std::span<const double> proposal_q,
                                 std::span<const std::vector<ClassId>> negatives) {
  check_shapes(weights, data, "gradient_blackout");
  check_draw_size(minibatch.size(), negatives.size(), "gradient_blackout");
  if (static_cast<int>(proposal_q.size()) != data.num_classes) {
    throw std::invalid_argument("gradient_blackout: proposal size mismatch");
  }
  GradientAccumulator acc(weights.cols);
  for (std::size_t i = 0; i < minibatch.size(); ++i) {
    const std::span<const double> x = data.inputs.row_span(minibatch[i]);
    const ClassId label = data.labels[minibatch[i]];
    if (negatives[i].empty()) {
      // no contrast classes: the objective is identically 0
      acc.add(label, 0.0, x);
      acc.add_ops(1);
      continue;
    }
    const BlackoutTerms bt = blackout_terms(weights, x, label, negatives[i], proposal_q);
    const std::size_t u = bt.uniq.size();
    std::vector<double> coeff(u, 0.0);
    // d/ds log p~(label): label term via t_label, negatives via the shared sum
    const double denom_label = bt.t_label + bt.total;
    double coeff_label = 1.0 - bt.t_label / denom_label;
    for (std::size_t a = 0; a < u; ++a) {
      coeff[a] -= bt.mult[a] * bt.t[a] / denom_label;
    }
    // d/ds log(1 - p~(d_j)) = d/ds [log total - log(t_j + total)], once per instance
    for (std::size_t j = 0; j < u; ++j) {
      const double denom_j = bt.t[j] + bt.total;
      const double scale = bt.mult[j];
      for (std::size_t a = 0; a < u; ++a) {
        coeff[a] += scale * (bt.mult[a] * bt.t[a]) * (1.0 / bt.total - 1.0 / denom_j);
      }
      coeff[j] -= scale * bt.t[j] / denom_j;
    }
    acc.add(label, coeff_label, x);
    for (std::size_t a = 0; a < u; ++a) acc.add(bt.uniq[a], coeff[a], x);
    acc.add_ops(1 + static_cast<OpCount>(negatives[i].size()));
  }
  return acc.take();
}

double objective_blackout(const Matrix& weights, const Dataset& data,
                          std::span<const int> minibatch,
                          std::span<const double> proposal_q,
                          std::span<const std::vector<ClassId>> negatives) {
  check_shapes(weights, data, "objective_blackout");
  check_draw_size(minibatch.size(), negatives.size(), "objective_blackout");
  double obj = 0.0;
  for (std::size_t i = 0; i < minibatch.size(); ++i) {
    if (negatives[i].empty()) continue;
    const std::span<const double> x = data.inputs.row_span(minibatch[i]);
    const ClassId label = data.labels[minibatch[i]];
    const BlackoutTerms bt = blackout_terms(weights, x, label, negatives[i], proposal_q);
    obj += std::log(bt.t_label) - std::log(bt.t_label + bt.total);
    for (std::size_t j = 0; j < bt.uniq.size(); ++j) {
      obj += bt.mult[j] * (std::log(bt.total) - std::log(bt.t[j] + bt.total));
    }
  }
  return obj;
}

// --- EstimatorContext -------------------------------------------------------

namespace {

std::vector<double> powered_distribution(const FrequencyTable& freq, double power) {
  std::vector<double> p(freq.f.size());
  double total = 0.0;
  for (std::size_t c = 0; c < p.size(); ++c) {
    p[c] = std::pow(freq.f[c], power);
    total += p[c];
  }
  for (double& v : p) v /= total;
  return p;
}

std::vector<double> prefix_sums(std::span<const double> p) {
  std::vector<double> cdf(p.size());
  double acc = 0.0;
  for (std::size_t c = 0; c < p.size(); ++c) {
    acc += p[c];
    cdf[c] = acc;
  }
  cdf.back() = 1.0;
  return cdf;
}

ClassId draw_from_cdf_vec(const std::vector<double>& cdf, RngStream& rng) {
  const double u = rng.next_uniform();
  const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
  return static_cast<ClassId>(
      std::min<std::ptrdiff_t>(it - cdf.begin(), static_cast<std::ptrdiff_t>(cdf.size()) - 1));
}

// Inversion sampling of the distribution renormalised to exclude one class.
ClassId draw_from_cdf_excluding(const std::vector<double>& cdf, std::span<const double> prob,
                                ClassId excluded, RngStream& rng) {
  const double pe = prob[excluded];
  const double before = cdf[excluded] - pe;
  double t = rng.next_uniform() * (1.0 - pe);
  if (t >= before) t += pe;
  auto it = std::upper_bound(cdf.begin(), cdf.end(), t);
  ClassId d = static_cast<ClassId>(
      std::min<std::ptrdiff_t>(it - cdf.begin(), static_cast<std::ptrdiff_t>(cdf.size()) - 1));
  if (d == excluded) {
    // rounding landed on the excluded slab boundary; step to a neighbour
    d = (excluded + 1 < static_cast<ClassId>(cdf.size())) ? excluded + 1 : excluded - 1;
  }
  return d;
}

}  // namespace

EstimatorContext::EstimatorContext(const Dataset& data, EstimatorConfig cfg)
    : data_(&data), cfg_(cfg) {
  data.validate();
  cfg_.validate(data.num_classes);
  freq_ = build_frequency_table(data.labels, data.num_classes, cfg_.freq_smoothing);
  ranking_alpha_ =
      cfg_.ranking_alpha.value_or(std::log(std::max(2, data.num_classes) - 1.0));
  switch (cfg_.method) {
    case Method::kSampledImportance:
      freq_cdf_ = prefix_sums(freq_.f);
      break;
    case Method::kNce:
      noise_dist_ = powered_distribution(freq_, cfg_.nce_noise_power);
      noise_cdf_ = prefix_sums(noise_dist_);
      break;
    case Method::kBlackout:
      blackout_q_ = powered_distribution(freq_, cfg_.blackout_power);
      blackout_cdf_ = prefix_sums(blackout_q_);
      break;
    default:
      break;
  }
}

std::vector<ClassId> EstimatorContext::positives_for(std::span<const int> minibatch,
                                                     int slot) const {
  if (cfg_.positive_set_mode == PositiveSetMode::kOwnLabelOnly) {
    return {data_->labels[minibatch[slot]]};
  }
  std::vector<ClassId> pos;
  pos.reserve(minibatch.size());
  for (int idx : minibatch) pos.push_back(data_->labels[idx]);
  std::sort(pos.begin(), pos.end());
  pos.erase(std::unique(pos.begin(), pos.end()), pos.end());
  return pos;
}

const BernoulliConfig& EstimatorContext::bernoulli_config_for(ClassId excluded_label) {
  auto it = bernoulli_cache_.find(excluded_label);
  if (it == bernoulli_cache_.end()) {
    const std::array<ClassId, 1> excl = {excluded_label};
    it = bernoulli_cache_
             .emplace(excluded_label,
                      make_bernoulli_config(freq_, excl,
                                            static_cast<double>(cfg_.num_negatives)))
             .first;
  }
  return it->second;
}

SampledSet EstimatorContext::draw_sampled_set(std::span<const int> minibatch, int slot,
                                              std::span<const ClassId> positives,
                                              RngStream& rng) {
  SampledSet set;
  set.label = data_->labels[minibatch[slot]];
  set.positives.assign(positives.begin(), positives.end());
  if (cfg_.method == Method::kSampledBernoulli) {
    set.negatives = bernoulli_draw(bernoulli_config_for(positives[0]), rng);
    set.degenerate = set.negatives.classes.empty();
  } else {
    // exclude-one inversion over f without building a per-label cdf
    const ClassId excl = positives[0];
    const double mass = 1.0 - freq_.f[excl];
    const int k = cfg_.num_negatives;
    for (int s = 0; s < k; ++s) {
      const ClassId d = draw_from_cdf_excluding(freq_cdf_, freq_.f, excl, rng);
      set.negatives.classes.push_back(d);
      set.negatives.kappa.push_back(mass / (k * freq_.f[d]));
    }
  }
  return set;
}

DrawSet EstimatorContext::draw(std::span<const int> minibatch, std::uint64_t seed,
                               std::int64_t iteration) {
  DrawSet ds;
  const std::size_t m = minibatch.size();
  const std::uint64_t iter_salt = static_cast<std::uint64_t>(iteration);
  switch (cfg_.method) {
    case Method::kExact:
      break;
    case Method::kSampledBernoulli:
    case Method::kSampledImportance: {
      const bool bernoulli = cfg_.method == Method::kSampledBernoulli;
      const bool shared_positives =
          cfg_.positive_set_mode == PositiveSetMode::kMinibatchLabelsShared;
      std::vector<ClassId> shared_pos;
      BernoulliConfig shared_bern;
      ImportanceConfig shared_is;
      if (shared_positives) {
        // one solver/proposal build per minibatch, reused by every slot
        shared_pos = positives_for(minibatch, 0);
        if (bernoulli) {
          shared_bern = make_bernoulli_config(freq_, shared_pos,
                                              static_cast<double>(cfg_.num_negatives));
        } else {
          shared_is = make_importance_config(freq_, shared_pos, cfg_.num_negatives);
        }
      }
      const auto draw_shared_negatives = [&](RngStream& rng) {
        return bernoulli ? bernoulli_draw(shared_bern, rng)
                         : importance_draw(shared_is, rng);
      };
      ds.sampled.reserve(m);
      if (cfg_.negative_set_mode == NegativeSetMode::kSharedAcrossMinibatch) {
        RngStream rng = derive_stream(seed, StreamTag::kNegatives, iter_salt, kSharedDrawSalt);
        const NegativeDraw negatives = draw_shared_negatives(rng);
        for (std::size_t i = 0; i < m; ++i) {
          SampledSet set;
          set.label = data_->labels[minibatch[i]];
          set.positives = shared_pos;
          set.negatives = negatives;
          set.degenerate = negatives.classes.empty();
          ds.sampled.push_back(std::move(set));
        }
      } else {
        for (std::size_t i = 0; i < m; ++i) {
          RngStream rng = derive_stream(seed, StreamTag::kNegatives, iter_salt, i);
          if (shared_positives) {
            SampledSet set;
            set.label = data_->labels[minibatch[i]];
            set.positives = shared_pos;
            set.negatives = draw_shared_negatives(rng);
            set.degenerate = set.negatives.classes.empty();
            ds.sampled.push_back(std::move(set));
          } else {
            const std::vector<ClassId> own = {data_->labels[minibatch[i]]};
            ds.sampled.push_back(
                draw_sampled_set(minibatch, static_cast<int>(i), own, rng));
          }
        }
      }
      for (const SampledSet& s : ds.sampled) {
        if (s.degenerate) ++ds.degenerate;
      }
      break;
    }
    case Method::kRanking:
    case Method::kNegativeSampling: {
      ds.negatives.resize(m);
      for (std::size_t i = 0; i < m; ++i) {
        RngStream rng = derive_stream(seed, StreamTag::kNegatives, iter_salt, i);
        const ClassId label = data_->labels[minibatch[i]];
        auto& negs = ds.negatives[i];
        negs.reserve(cfg_.num_negatives);
        for (int s = 0; s < cfg_.num_negatives; ++s) {
          // uniform over the complement of the label
          ClassId d = static_cast<ClassId>(rng.next_index(data_->num_classes - 1));
          if (d >= label) ++d;
          negs.push_back(d);
        }
      }
      break;
    }
    case Method::kNce: {
      ds.noise.resize(m);
      for (std::size_t i = 0; i < m; ++i) {
        RngStream rng = derive_stream(seed, StreamTag::kNoise, iter_salt, i);
        auto& draws = ds.noise[i];
        draws.reserve(cfg_.num_negatives);
        for (int s = 0; s < cfg_.num_negatives; ++s) {
          draws.push_back(draw_from_cdf_vec(noise_cdf_, rng));
        }
      }
      break;
    }
    case Method::kBlackout: {
      ds.negatives.resize(m);
      for (std::size_t i = 0; i < m; ++i) {
        RngStream rng = derive_stream(seed, StreamTag::kNegatives, iter_salt, i);
        const ClassId label = data_->labels[minibatch[i]];
        auto& negs = ds.negatives[i];
        negs.reserve(cfg_.num_negatives);
        for (int s = 0; s < cfg_.num_negatives; ++s) {
          negs.push_back(draw_from_cdf_excluding(blackout_cdf_, blackout_q_, label, rng));
        }
      }
      break;
    }
  }
  return ds;
}

SparseGradient EstimatorContext::minibatch_gradient(const Matrix& weights,
                                                    std::span<const int> minibatch,
                                                    const DrawSet& draws) const {
  switch (cfg_.method) {
    case Method::kExact:
      return gradient_exact(weights, *data_, minibatch);
    case Method::kSampledBernoulli:
    case Method::kSampledImportance:
      return gradient_sampled_likelihood(weights, *data_, minibatch, draws.sampled);
    case Method::kRanking:
      return gradient_ranking(weights, *data_, minibatch, draws.negatives, ranking_alpha_);
    case Method::kNce:
      return gradient_nce(weights, *data_, minibatch, draws.noise, noise_dist_,
                          cfg_.nce_normalizer);
    case Method::kNegativeSampling:
      return gradient_negative_sampling(weights, *data_, minibatch, draws.negatives);
    case Method::kBlackout:
      return gradient_blackout(weights, *data_, minibatch, blackout_q_, draws.negatives);
  }
  throw std::logic_error("unreachable estimator method");
}

double EstimatorContext::objective(const Matrix& weights, std::span<const int> minibatch,
                                   const DrawSet& draws) const {
  switch (cfg_.method) {
    case Method::kExact:
      return objective_exact(weights, *data_, minibatch);
    case Method::kSampledBernoulli:
    case Method::kSampledImportance:
      return objective_sampled_likelihood(weights, *data_, minibatch, draws.sampled);
    case Method::kRanking:
      return objective_ranking(weights, *data_, minibatch, draws.negatives, ranking_alpha_);
    case Method::kNce:
      return objective_nce(weights, *data_, minibatch, draws.noise, noise_dist_,
                           cfg_.nce_normalizer);
    case Method::kNegativeSampling:
      return objective_negative_sampling(weights, *data_, minibatch, draws.negatives);
    case Method::kBlackout:
      return objective_blackout(weights, *data_, minibatch, blackout_q_, draws.negatives);
  }
  throw std::logic_error("unreachable estimator method");
}

double objective_value(Method method, const Matrix& weights, const Dataset& data,
                       std::span<const int> minibatch, const DrawSet& draws,
                       const EstimatorContext& ctx) {
  if (method != ctx.config().method) {
    throw std::invalid_argument("objective_value: method does not match context");
  }
  (void)data;
  return ctx.objective(weights, minibatch, draws);
}

}  // namespace manyclass
