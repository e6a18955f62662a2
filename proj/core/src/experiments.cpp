#include "manyclass/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <unordered_map>
#include <utility>

#include "manyclass/model.hpp"
#include "manyclass/rng.hpp"
#include "manyclass/samplers.hpp"
#include "manyclass/text.hpp"

namespace manyclass {

SyntheticProblem generate_synthetic(int n, int dim, int num_classes, std::uint64_t seed) {
  if (n < 1 || dim < 1 || num_classes < 1) {
    throw std::invalid_argument("generate_synthetic: N, D, C must all be >= 1");
  }
  SyntheticProblem prob;
  prob.gen_seed = seed;

  prob.true_weights = Matrix(num_classes, dim);
  {
    RngStream rng = derive_stream(seed, StreamTag::kTrueWeights);
    for (double& v : prob.true_weights.data) v = rng.next_gaussian();
  }
  prob.data.inputs = Matrix(n, dim);
  {
    RngStream rng = derive_stream(seed, StreamTag::kInputs);
    for (double& v : prob.data.inputs.data) v = rng.next_gaussian();
  }
  prob.data.num_classes = num_classes;
  prob.data.labels.resize(n);
  {
    RngStream rng = derive_stream(seed, StreamTag::kLabels);
    std::vector<double> p(num_classes);
    for (int i = 0; i < n; ++i) {
      scores(prob.true_weights, prob.data.inputs.row_span(i), p);
      softmax_inplace(p);
      const double u = rng.next_uniform();
      double acc = 0.0;
      ClassId label = num_classes - 1;
      for (int c = 0; c < num_classes; ++c) {
        acc += p[c];
        if (u < acc) {
          label = c;
          break;
        }
      }
      prob.data.labels[i] = label;
    }
  }
  return prob;
}

double log_metric_floor() { return std::log(kMetricFloor); }

double bias_metric(const Matrix& params, const Matrix& true_params, const Matrix& inputs) {
  if (!params.same_shape(true_params)) {
    throw std::invalid_argument("bias_metric: parameter shapes differ");
  }
  if (params.cols != inputs.cols) {
    throw std::invalid_argument("bias_metric: input dimension mismatch");
  }
  std::vector<double> pa(params.rows), pb(params.rows);
  double acc = 0.0;
  for (int i = 0; i < inputs.rows; ++i) {
    const auto x = inputs.row_span(i);
    scores(params, x, pa);
    scores(true_params, x, pb);
    softmax_inplace(pa);
    softmax_inplace(pb);
    for (int c = 0; c < params.rows; ++c) acc += std::abs(pa[c] - pb[c]);
  }
  const double mean = acc / (static_cast<double>(inputs.rows) * params.rows);
  return std::log(std::max(mean, kMetricFloor));
}

double param_diff_metric(const Matrix& a, const Matrix& b) {
  if (!a.same_shape(b)) throw std::invalid_argument("param_diff_metric: shapes differ");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) acc += std::abs(a.data[i] - b.data[i]);
  const double mean = acc / static_cast<double>(a.data.size());
  return std::log(std::max(mean, kMetricFloor));
}

namespace {

// Shared per-problem evaluation state: the true model's class probabilities
// are fixed, so they are computed once. One pass per evaluation computes the
// exact log likelihood and the bias together.
class ProblemEval {
 public:
  explicit ProblemEval(const SyntheticProblem& prob) : prob_(&prob) {
    const Dataset& data = prob.data;
    true_probs_ = Matrix(data.size(), data.num_classes);
    for (int i = 0; i < data.size(); ++i) {
      scores(prob.true_weights, data.inputs.row_span(i), true_probs_.row_span(i));
      softmax_inplace(true_probs_.row_span(i));
    }
  }

  std::pair<double, double> ll_and_bias(const Matrix& params) const {
    const Dataset& data = prob_->data;
    std::vector<double> s(data.num_classes);
    double ll = 0.0;
    double absdiff = 0.0;
    for (int i = 0; i < data.size(); ++i) {
      scores(params, data.inputs.row_span(i), s);
      double m = s[0];
      for (double v : s) m = std::max(m, v);
      double sum = 0.0;
      for (double v : s) sum += std::exp(v - m);
      ll += s[data.labels[i]] - (m + std::log(sum));
      const double inv = 1.0 / sum;
      const double* tp = true_probs_.row(i);
      for (int c = 0; c < data.num_classes; ++c) {
        absdiff += std::abs(std::exp(s[c] - m) * inv - tp[c]);
      }
    }
    const double mean = absdiff / (static_cast<double>(data.size()) * data.num_classes);
    return {ll, std::log(std::max(mean, kMetricFloor))};
  }

 private:
  const SyntheticProblem* prob_;
  Matrix true_probs_;
};

// Convergence probe for the learning-rate search. The gamma-style weights are
// bounded, so an unstable momentum run never overflows; it shows up as an
// exact-likelihood trace that stalls or collapses instead. A rate is rejected
// when the run hits non-finite state, the parameters blow past `bound`, the
// final likelihood has not improved on the zero-init likelihood, or it ends
// well below the best value seen along the probe.
bool probe_diverges(const Dataset& data, const EstimatorConfig& est_cfg,
                    TrainerConfig cfg, double learning_rate, double bound) {
  cfg.learning_rate = learning_rate;
  cfg.eval_every = std::max<std::int64_t>(1, cfg.iterations / 4);

  const int probe_points = std::min(data.size(), 500);
  std::vector<int> subsample(probe_points);
  for (int i = 0; i < probe_points; ++i) subsample[i] = i;

  double worst_param = 0.0;
  double best_ll = -std::numeric_limits<double>::infinity();
  double first_ll = 0.0, last_ll = 0.0;
  bool have_first = false;
  const EvalHook hook = [&](std::int64_t, const Matrix& params, OpCount) {
    for (double v : params.data) worst_param = std::max(worst_param, std::abs(v));
    const double ll = log_likelihood(params, data, subsample);
    if (!have_first) {
      first_ll = ll;
      have_first = true;
    }
    best_ll = std::max(best_ll, ll);
    last_ll = ll;
    return MetricsRecord{};
  };
  const MetricsTrace t =
      train(data, Matrix(data.num_classes, data.dim(), 0.0), est_cfg, cfg, hook);
  if (t.diverged || !(worst_param <= bound) || !std::isfinite(last_ll)) return true;
  if (!(last_ll > first_ll)) return true;
  return last_ll < best_ll - 0.05 * std::abs(best_ll);
}

double resolve_learning_rate(const MethodSpec& spec, const Dataset& data,
                             const TrainerConfig& cfg, const ComparisonOptions& opt) {
  if (spec.learning_rate) return *spec.learning_rate;
  const Method m = spec.estimator.method;
  if (m != Method::kRanking && m != Method::kBlackout) return cfg.learning_rate;
  // largest rate in the halving grid that survives the full iteration budget
  for (double lr : opt.lr_search_grid) {
    if (!probe_diverges(data, spec.estimator, cfg, lr, opt.divergence_bound)) return lr;
  }
  return opt.lr_search_grid.back();
}

}  // namespace

ComparisonResult run_comparison(const SyntheticProblem& problem,
                                std::vector<MethodSpec> methods, const TrainerConfig& cfg,
                                const ComparisonOptions& opt) {
  if (methods.empty()) throw std::invalid_argument("run_comparison: no methods given");
  problem.data.validate();
  cfg.validate(problem.data.size());
  if (opt.lr_search_grid.empty()) {
    throw std::invalid_argument("run_comparison: empty learning-rate grid");
  }

  // the exact-gradient run is the parameter-difference reference; add one if
  // the caller did not ask for it
  int exact_pos = -1;
  for (std::size_t i = 0; i < methods.size(); ++i) {
    if (methods[i].estimator.method == Method::kExact) {
      exact_pos = static_cast<int>(i);
      break;
    }
  }
  if (exact_pos < 0) {
    MethodSpec exact;
    exact.tag = "exact";
    exact.estimator.method = Method::kExact;
    methods.insert(methods.begin(), std::move(exact));
    exact_pos = 0;
  }

  const ProblemEval eval(problem);
  std::unordered_map<std::int64_t, Matrix> reference_params;

  const auto run_one = [&](const MethodSpec& spec, bool is_reference) {
    const double lr = resolve_learning_rate(spec, problem.data, cfg, opt);
    TrainerConfig run_cfg = cfg;
    run_cfg.learning_rate = lr;
    const auto start = std::chrono::steady_clock::now();
    const EvalHook hook = [&](std::int64_t iteration, const Matrix& params, OpCount ops) {
      MetricsRecord rec;
      rec.iteration = iteration;
      rec.method = spec.tag;
      rec.op_count = ops;
      const auto [ll, bias] = eval.ll_and_bias(params);
      rec.exact_ll = ll;
      rec.bias = bias;
      if (is_reference) {
        reference_params.emplace(iteration, params);
        rec.param_diff = log_metric_floor();
      } else {
        const auto ref = reference_params.find(iteration);
        rec.param_diff = ref != reference_params.end()
                             ? param_diff_metric(params, ref->second)
                             : log_metric_floor();
      }
      if (opt.measure_wallclock) {
        rec.wallclock_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                               std::chrono::steady_clock::now() - start)
                               .count();
      }
      return rec;
    };
    MetricsTrace trace = train(problem.data,
                               Matrix(problem.data.num_classes, problem.data.dim(), 0.0),
                               spec.estimator, run_cfg, hook);
    trace.learning_rate_used = lr;
    return MethodTrace{spec.tag, std::move(trace), lr};
  };

  ComparisonResult result;
  result.methods.resize(methods.size());
  result.methods[exact_pos] = run_one(methods[exact_pos], true);
  for (std::size_t i = 0; i < methods.size(); ++i) {
    if (static_cast<int>(i) == exact_pos) continue;
    result.methods[i] = run_one(methods[i], false);
  }
  return result;
}

std::string ranking_sweep_tag(double alpha) {
  return "ranking(alpha=" + format_double_sig(alpha, 6) + ")";
}

ComparisonResult run_alpha_sweep(const SyntheticProblem& problem,
                                 std::span<const double> alphas,
                                 const EstimatorConfig& ranking_base,
                                 const TrainerConfig& cfg, const ComparisonOptions& opt) {
  if (alphas.empty()) throw std::invalid_argument("run_alpha_sweep: no alpha values");
  std::vector<MethodSpec> specs;
  MethodSpec exact;
  exact.tag = "exact";
  exact.estimator = ranking_base;
  exact.estimator.method = Method::kExact;
  specs.push_back(std::move(exact));
  for (double a : alphas) {
    if (!(a > 0.0)) throw std::invalid_argument("run_alpha_sweep: alpha values must be > 0");
    MethodSpec spec;
    spec.tag = ranking_sweep_tag(a);
    spec.estimator = ranking_base;
    spec.estimator.method = Method::kRanking;
    spec.estimator.ranking_alpha = a;
    specs.push_back(std::move(spec));
  }
  return run_comparison(problem, std::move(specs), cfg, opt);
}

std::vector<VarianceStudyRow> run_variance_study(const VarianceStudyConfig& cfg) {
  if (cfg.num_classes < 1) throw std::invalid_argument("variance study: C must be >= 1");
  if (!(cfg.compute_fraction > 0.0 && cfg.compute_fraction <= 1.0)) {
    throw std::invalid_argument("variance study: compute fraction must lie in (0, 1]");
  }
  if (cfg.trials < 2) throw std::invalid_argument("variance study: needs >= 2 trials");
  if (!(cfg.z_sparsity >= 0.0 && cfg.z_sparsity <= 1.0)) {
    throw std::invalid_argument("variance study: z sparsity must lie in [0, 1]");
  }
  const int c = cfg.num_classes;
  const int s = std::max<int>(1, static_cast<int>(std::llround(cfg.compute_fraction * c)));

  std::vector<double> z(c, 0.0);
  {
    RngStream rng = derive_stream(cfg.seed, StreamTag::kZVector);
    for (double& v : z) {
      if (rng.next_bernoulli(cfg.z_sparsity)) v = cfg.z_scale;
    }
  }
  double exact_z = 0.0;
  for (double v : z) exact_z += v;

  // matched compute: uniform proposal, uniform inclusion probability b = S/C
  const ImportanceConfig is_cfg =
      make_importance_config(std::vector<double>(c, 1.0), {}, s);
  const std::vector<double> b(c, static_cast<double>(s) / c);

  const auto sample_variance = [&](auto&& estimate, StreamTag tag, std::uint64_t salt) {
    RngStream rng = derive_stream(cfg.seed, tag, salt);
    double mean = 0.0, m2 = 0.0;
    for (std::int64_t t = 0; t < cfg.trials; ++t) {
      const double v = estimate(rng);
      const double delta = v - mean;
      mean += delta / static_cast<double>(t + 1);
      m2 += delta * (v - mean);
    }
    return std::pair<double, double>{mean, m2 / static_cast<double>(cfg.trials - 1)};
  };

  const auto [is_mean, is_var] = sample_variance(
      [&](RngStream& rng) { return estimate_z_importance(z, is_cfg, rng); },
      StreamTag::kTrials, 0);
  const auto [bern_mean, bern_var] = sample_variance(
      [&](RngStream& rng) { return estimate_z_bernoulli(z, b, rng); }, StreamTag::kTrials,
      1);

  std::vector<VarianceStudyRow> rows;
  rows.push_back({"importance", is_var, importance_variance(z, is_cfg.q, s), is_mean,
                  exact_z});
  rows.push_back({"bernoulli", bern_var, bernoulli_variance(z, b), bern_mean, exact_z});
  return rows;
}

}  // namespace manyclass
