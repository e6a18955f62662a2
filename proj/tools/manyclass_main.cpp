// Command line surface: data generation, method comparisons, the ranking
// alpha sweep, the estimator variance study, and SVG rendering of result CSVs.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "manyclass/dataset_io.hpp"
#include "manyclass/estimators.hpp"
#include "manyclass/experiments.hpp"
#include "manyclass/metrics_csv.hpp"
#include "manyclass/svg_plot.hpp"
#include "manyclass/text.hpp"

namespace {

using namespace manyclass;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitDiverged = 2;

std::string valid_method_list() {
  std::string out;
  for (Method m : all_methods()) {
    if (!out.empty()) out += ", ";
    out += method_name(m);
  }
  return out;
}

PositiveSetMode parse_positive_set(const std::string& s) {
  if (s == "own-label") return PositiveSetMode::kOwnLabelOnly;
  if (s == "minibatch-labels") return PositiveSetMode::kMinibatchLabelsShared;
  throw std::invalid_argument("unknown positive-set mode '" + s +
                              "'; valid: own-label, minibatch-labels");
}

NegativeSetMode parse_negative_set(const std::string& s) {
  if (s == "per-datapoint") return NegativeSetMode::kPerDatapoint;
  if (s == "shared") return NegativeSetMode::kSharedAcrossMinibatch;
  throw std::invalid_argument("unknown negative-set mode '" + s +
                              "'; valid: per-datapoint, shared");
}

struct GenDataOpts {
  int n = 2000;
  int d = 100;
  int c = 1000;
  std::uint64_t seed = 1;
  std::string out = "dataset.txt";
  std::string true_params_out = "true_params.txt";
};

int run_gen_data(const GenDataOpts& o) {
  const SyntheticProblem prob = generate_synthetic(o.n, o.d, o.c, o.seed);
  write_dataset(o.out, prob.data);
  write_matrix(o.true_params_out, prob.true_weights);
  std::cout << "wrote " << o.out << " (" << o.n << " datapoints, dim " << o.d << ", "
            << o.c << " classes) and " << o.true_params_out << "\n";
  return kExitOk;
}

struct TrainRunOpts {
  std::string data_path = "dataset.txt";
  std::string true_params_path = "true_params.txt";
  std::string out;
  int k = 20;
  int minibatch = 50;
  std::int64_t iterations = 2000;
  double lr = 0.02;
  double momentum = 0.99;
  std::int64_t eval_every = 10;
  std::uint64_t seed = 1;
  double alpha = 0.0;
  std::string positive_set = "own-label";
  std::string negative_set = "per-datapoint";
  double nce_noise_power = 1.0;
  double blackout_power = 1.0;
  double nce_z = 1.0;
  double smoothing = 1.0;
  bool timing = false;
  bool lr_given = false;
  bool alpha_given = false;
};

SyntheticProblem load_problem(const TrainRunOpts& o) {
  SyntheticProblem prob;
  prob.data = read_dataset(o.data_path);
  prob.true_weights = read_matrix(o.true_params_path);
  if (prob.true_weights.rows != prob.data.num_classes ||
      prob.true_weights.cols != prob.data.dim()) {
    throw std::invalid_argument("true-params shape does not match the dataset");
  }
  prob.gen_seed = o.seed;
  return prob;
}

EstimatorConfig base_estimator_config(const TrainRunOpts& o) {
  EstimatorConfig cfg;
  cfg.num_negatives = o.k;
  cfg.positive_set_mode = parse_positive_set(o.positive_set);
  cfg.negative_set_mode = parse_negative_set(o.negative_set);
  if (o.alpha_given) {
    if (!(o.alpha > 0.0)) throw std::invalid_argument("--alpha must be > 0");
    cfg.ranking_alpha = o.alpha;
  }
  cfg.nce_noise_power = o.nce_noise_power;
  cfg.blackout_power = o.blackout_power;
  cfg.nce_normalizer = o.nce_z;
  cfg.freq_smoothing = o.smoothing;
  return cfg;
}

TrainerConfig trainer_config(const TrainRunOpts& o, int data_size) {
  TrainerConfig cfg;
  cfg.learning_rate = o.lr;
  cfg.momentum = o.momentum;
  cfg.minibatch_size = o.minibatch;
  cfg.iterations = o.iterations;
  cfg.seed = o.seed;
  cfg.eval_every = o.eval_every;
  cfg.validate(data_size);
  return cfg;
}

CsvMetadata common_metadata(const char* command, const TrainRunOpts& o,
                            const SyntheticProblem& prob) {
  CsvMetadata md;
  md.emplace_back("command", command);
  md.emplace_back("data", o.data_path);
  md.emplace_back("true_params", o.true_params_path);
  md.emplace_back("n", std::to_string(prob.data.size()));
  md.emplace_back("d", std::to_string(prob.data.dim()));
  md.emplace_back("c", std::to_string(prob.data.num_classes));
  md.emplace_back("k", std::to_string(o.k));
  md.emplace_back("minibatch", std::to_string(o.minibatch));
  md.emplace_back("iterations", std::to_string(o.iterations));
  md.emplace_back("momentum", format_double(o.momentum));
  md.emplace_back("eval_every", std::to_string(o.eval_every));
  md.emplace_back("seed", std::to_string(o.seed));
  md.emplace_back("positive_set", o.positive_set);
  md.emplace_back("negative_set", o.negative_set);
  md.emplace_back("nce_noise_power", format_double(o.nce_noise_power));
  md.emplace_back("blackout_power", format_double(o.blackout_power));
  md.emplace_back("nce_z", format_double(o.nce_z));
  md.emplace_back("smoothing", format_double(o.smoothing));
  md.emplace_back("timing", o.timing ? "1" : "0");
  return md;
}

int finish_run(const std::string& out_path, CsvMetadata md, const ComparisonResult& result) {
  bool any_diverged = false;
  std::int64_t degenerate = 0;
  for (const MethodTrace& m : result.methods) {
    md.emplace_back("learning_rate." + m.tag, format_double(m.learning_rate));
    if (m.trace.diverged) {
      md.emplace_back("diverged." + m.tag, "1");
      any_diverged = true;
    }
    degenerate += m.trace.degenerate_draws;
  }
  if (degenerate > 0) md.emplace_back("degenerate_draws", std::to_string(degenerate));
  write_metrics_csv(out_path, md, result);
  std::cout << "wrote " << out_path << "\n";
  if (any_diverged) {
    std::cerr << "warning: at least one run diverged; its trace is truncated\n";
    return kExitDiverged;
  }
  return kExitOk;
}

int run_compare(const TrainRunOpts& o, const std::vector<std::string>& methods) {
  std::vector<Method> parsed;
  for (const std::string& name : methods) {
    const auto method = parse_method(name);
    if (!method) {
      throw std::invalid_argument("unknown method '" + name +
                                  "'; valid methods: " + valid_method_list());
    }
    parsed.push_back(*method);
  }

  const SyntheticProblem prob = load_problem(o);
  const EstimatorConfig base = base_estimator_config(o);
  const TrainerConfig tcfg = trainer_config(o, prob.data.size());

  std::vector<MethodSpec> specs;
  for (std::size_t i = 0; i < methods.size(); ++i) {
    MethodSpec spec;
    spec.tag = methods[i];
    spec.estimator = base;
    spec.estimator.method = parsed[i];
    if (o.lr_given) spec.learning_rate = o.lr;
    specs.push_back(std::move(spec));
  }

  ComparisonOptions copt;
  copt.measure_wallclock = o.timing;
  const ComparisonResult result = run_comparison(prob, specs, tcfg, copt);

  CsvMetadata md = common_metadata("compare", o, prob);
  std::string joined;
  for (const std::string& m : methods) {
    if (!joined.empty()) joined += ' ';
    joined += m;
  }
  md.emplace_back("methods", joined);
  if (o.alpha_given) md.emplace_back("alpha", format_double(o.alpha));
  return finish_run(o.out.empty() ? "compare.csv" : o.out, std::move(md), result);
}

int run_alpha_sweep(const TrainRunOpts& o, std::vector<double> alphas, bool alphas_given) {
  const SyntheticProblem prob = load_problem(o);
  if (!alphas_given) {
    // brackets the contrast between alpha = 1 and the suggested log(C - 1)
    alphas = {1.0, 2.0, std::log(std::max(2, prob.data.num_classes) - 1.0), 9.0};
  }
  for (double a : alphas) {
    if (!(a > 0.0)) throw std::invalid_argument("--alphas entries must be > 0");
  }
  EstimatorConfig base = base_estimator_config(o);
  base.ranking_alpha.reset();  // per-alpha configs are built by the sweep
  const TrainerConfig tcfg = trainer_config(o, prob.data.size());

  ComparisonOptions copt;
  copt.measure_wallclock = o.timing;
  const ComparisonResult result = run_alpha_sweep(prob, alphas, base, tcfg, copt);

  CsvMetadata md = common_metadata("alpha-sweep", o, prob);
  std::string joined;
  for (double a : alphas) {
    if (!joined.empty()) joined += ' ';
    joined += format_double(a);
  }
  md.emplace_back("alphas", joined);
  return finish_run(o.out.empty() ? "alpha_sweep.csv" : o.out, std::move(md), result);
}

struct VarianceOpts {
  int c = 1000;
  double fraction = 0.05;
  std::int64_t trials = 20000;
  std::uint64_t seed = 1;
  double z_sparsity = 0.02;
  double z_scale = 1.0;
  std::string out = "variance.csv";
};

int run_variance(const VarianceOpts& o) {
  VarianceStudyConfig cfg;
  cfg.num_classes = o.c;
  cfg.compute_fraction = o.fraction;
  cfg.trials = o.trials;
  cfg.seed = o.seed;
  cfg.z_sparsity = o.z_sparsity;
  cfg.z_scale = o.z_scale;
  const std::vector<VarianceStudyRow> rows = run_variance_study(cfg);

  std::ofstream out(o.out, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + o.out + "' for writing");
  out << "# command=variance-study\n";
  out << "# c=" << o.c << "\n";
  out << "# f=" << format_double(o.fraction) << "\n";
  out << "# trials=" << o.trials << "\n";
  out << "# seed=" << o.seed << "\n";
  out << "# z_sparsity=" << format_double(o.z_sparsity) << "\n";
  out << "# z_scale=" << format_double(o.z_scale) << "\n";
  for (const VarianceStudyRow& r : rows) {
    out << "# mean." << r.estimator << "=" << format_double(r.empirical_mean) << "\n";
  }
  out << "# exact_z=" << format_double(rows.front().exact_z) << "\n";
  out << "estimator,empirical_variance,closed_form_variance\n";
  for (const VarianceStudyRow& r : rows) {
    out << r.estimator << ',' << format_double(r.empirical_variance) << ','
        << format_double(r.closed_form_variance) << "\n";
  }
  out.flush();
  if (!out) throw std::runtime_error("failed writing '" + o.out + "'");
  std::cout << "wrote " << o.out << "\n";
  return kExitOk;
}

struct PlotOpts {
  std::string in;
  std::vector<std::string> metrics = {"exact_ll", "bias", "param_diff"};
  std::string out_prefix;
};

int run_plot(const PlotOpts& o) {
  const MetricsCsv csv = read_metrics_csv(o.in);
  if (csv.rows.empty()) {
    throw std::runtime_error("no data rows in '" + o.in + "'; nothing to plot");
  }
  std::string prefix = o.out_prefix;
  if (prefix.empty()) {
    prefix = o.in;
    if (prefix.size() > 4 && prefix.substr(prefix.size() - 4) == ".csv") {
      prefix = prefix.substr(0, prefix.size() - 4);
    }
  }
  for (const std::string& metric : o.metrics) {
    const std::string svg = render_metric_svg(csv.rows, metric);
    const std::string path = prefix + "_" + metric + ".svg";
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    out << svg;
    out.flush();
    if (!out) throw std::runtime_error("failed writing '" + path + "'");
    std::cout << "wrote " << path << "\n";
  }
  return kExitOk;
}

void add_train_run_options(CLI::App* cmd, TrainRunOpts& o) {
  cmd->add_option("--data", o.data_path, "dataset file")->capture_default_str();
  cmd->add_option("--true-params", o.true_params_path, "true parameter file")
      ->capture_default_str();
  cmd->add_option("--out", o.out, "output CSV path");
  cmd->add_option("--k", o.k, "negative/noise samples per datapoint")
      ->capture_default_str();
  cmd->add_option("--minibatch", o.minibatch, "minibatch size")->capture_default_str();
  cmd->add_option("--iterations", o.iterations, "gradient ascent iterations")
      ->capture_default_str();
  auto* lr = cmd->add_option("--lr", o.lr,
                             "learning rate; pins ranking/blackout too (otherwise those "
                             "use the largest non-divergent rate from a halving grid)")
                 ->capture_default_str();
  cmd->add_option("--momentum", o.momentum, "momentum coefficient")->capture_default_str();
  cmd->add_option("--eval-every", o.eval_every, "iterations between metric evaluations")
      ->capture_default_str();
  cmd->add_option("--seed", o.seed, "master seed")->capture_default_str();
  auto* alpha =
      cmd->add_option("--alpha", o.alpha, "ranking threshold (default: log(C-1))");
  cmd->add_option("--positive-set", o.positive_set, "own-label | minibatch-labels")
      ->capture_default_str();
  cmd->add_option("--negative-set", o.negative_set, "per-datapoint | shared")
      ->capture_default_str();
  cmd->add_option("--nce-noise-power", o.nce_noise_power,
                  "nce noise distribution is f(c)^power")
      ->capture_default_str();
  cmd->add_option("--blackout-power", o.blackout_power,
                  "blackout proposal Q(c) is f(c)^power")
      ->capture_default_str();
  cmd->add_option("--nce-z", o.nce_z, "fixed nce normalisation scalar")
      ->capture_default_str();
  cmd->add_option("--smoothing", o.smoothing, "add-count frequency smoothing")
      ->capture_default_str();
  cmd->add_flag("--timing", o.timing,
                "record wall clock in the CSV (off keeps reruns byte-identical)");
  cmd->parse_complete_callback([&o, lr, alpha] {
    o.lr_given = lr->count() > 0;
    o.alpha_given = alpha->count() > 0;
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"training laboratory for probabilistic classifiers with very many classes"};
  app.require_subcommand(1);
  app.set_config("--config", "", "key=value config file; explicit flags take precedence");

  int exit_code = kExitOk;

  GenDataOpts gen_opts;
  auto* gen = app.add_subcommand("gen-data", "generate a realisable synthetic dataset");
  gen->add_option("--n", gen_opts.n, "datapoints")->capture_default_str();
  gen->add_option("--d", gen_opts.d, "input dimension")->capture_default_str();
  gen->add_option("--c", gen_opts.c, "classes")->capture_default_str();
  gen->add_option("--seed", gen_opts.seed, "generator seed")->capture_default_str();
  gen->add_option("--out", gen_opts.out, "dataset file")->capture_default_str();
  gen->add_option("--true-params-out", gen_opts.true_params_out, "true parameter file")
      ->capture_default_str();
  gen->callback([&] { exit_code = run_gen_data(gen_opts); });

  TrainRunOpts cmp_opts;
  std::vector<std::string> cmp_methods = {"exact", "sampled-bernoulli",
                                          "sampled-importance", "ranking", "blackout"};
  auto* cmp = app.add_subcommand(
      "compare", "train every requested estimator on one dataset and emit a results CSV");
  cmp->add_option("--methods", cmp_methods, "methods to run (" + valid_method_list() + ")")
      ->delimiter(',')
      ->capture_default_str();
  add_train_run_options(cmp, cmp_opts);
  cmp->callback([&] { exit_code = run_compare(cmp_opts, cmp_methods); });

  TrainRunOpts sweep_opts;
  std::vector<double> sweep_alphas;
  auto* sweep = app.add_subcommand(
      "alpha-sweep", "train the ranking estimator over several thresholds plus an exact "
                     "reference run");
  auto* alphas_opt = sweep->add_option("--alphas", sweep_alphas,
                                       "thresholds (default: 1,2,log(C-1),9)")
                         ->delimiter(',');
  add_train_run_options(sweep, sweep_opts);
  sweep->callback(
      [&] { exit_code = run_alpha_sweep(sweep_opts, sweep_alphas, alphas_opt->count() > 0); });

  VarianceOpts var_opts;
  auto* var = app.add_subcommand(
      "variance-study",
      "matched-compute comparison of the importance and Bernoulli Z estimators");
  var->add_option("--c", var_opts.c, "number of summed elements")->capture_default_str();
  var->add_option("--f", var_opts.fraction, "compute fraction S/C in (0,1]")
      ->capture_default_str();
  var->add_option("--trials", var_opts.trials, "Monte Carlo trials per estimator")
      ->capture_default_str();
  var->add_option("--seed", var_opts.seed, "study seed")->capture_default_str();
  var->add_option("--z-sparsity", var_opts.z_sparsity,
                  "probability that a z entry is nonzero")
      ->capture_default_str();
  var->add_option("--z-scale", var_opts.z_scale, "value of nonzero z entries")
      ->capture_default_str();
  var->add_option("--out", var_opts.out, "output CSV path")->capture_default_str();
  var->callback([&] { exit_code = run_variance(var_opts); });

  PlotOpts plot_opts;
  auto* plot = app.add_subcommand("plot", "render metric SVG charts from a results CSV");
  plot->add_option("--in", plot_opts.in, "results CSV")->required();
  plot->add_option("--metrics", plot_opts.metrics,
                   "metric columns to render (exact_ll, bias, param_diff)")
      ->delimiter(',')
      ->capture_default_str();
  plot->add_option("--out-prefix", plot_opts.out_prefix,
                   "output prefix (default: CSV path without .csv)");
  plot->callback([&] { exit_code = run_plot(plot_opts); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return exit_code;
}
