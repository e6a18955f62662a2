#include "manyclass/samplers.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace manyclass {

namespace {

std::vector<char> excluded_mask(int num_classes, std::span<const ClassId> excluded) {
  std::vector<char> mask(num_classes, 0);
  for (ClassId c : excluded) {
    if (c < 0 || c >= num_classes) {
      throw std::invalid_argument("excluded class out of range");
    }
    mask[c] = 1;
  }
  return mask;
}

}  // namespace

FrequencyTable build_frequency_table(std::span<const ClassId> labels, int num_classes,
                                     double smoothing) {
  if (num_classes < 1) throw std::invalid_argument("frequency table: num_classes >= 1");
  if (smoothing < 0.0) throw std::invalid_argument("frequency table: smoothing >= 0");
  FrequencyTable t;
  t.num_classes = num_classes;
  t.counts.assign(num_classes, 0);
  for (ClassId c : labels) {
    if (c < 0 || c >= num_classes) throw std::invalid_argument("frequency table: bad label");
    ++t.counts[c];
  }
  if (smoothing == 0.0) {
    for (auto n : t.counts) {
      if (n == 0) {
        throw std::invalid_argument(
            "frequency table: unobserved class with zero smoothing leaves f(c) = 0");
      }
    }
  }
  const double denom = static_cast<double>(labels.size()) + smoothing * num_classes;
  t.f.resize(num_classes);
  for (int c = 0; c < num_classes; ++c) {
    t.f[c] = (static_cast<double>(t.counts[c]) + smoothing) / denom;
  }
  return t;
}

double solve_alpha_exponent(const FrequencyTable& freq, std::span<const ClassId> excluded,
                            double target) {
  const auto mask = excluded_mask(freq.num_classes, excluded);
  int allowed = 0;
  for (int c = 0; c < freq.num_classes; ++c) {
    if (mask[c]) continue;
    ++allowed;
    if (freq.f[c] >= 1.0) {
      throw std::invalid_argument("solve_alpha_exponent: degenerate frequency f(c) >= 1");
    }
    if (freq.f[c] <= 0.0) {
      throw std::invalid_argument("solve_alpha_exponent: nonpositive frequency");
    }
  }
  if (!(target > 0.0) || target > static_cast<double>(allowed)) {
    throw std::invalid_argument("solve_alpha_exponent: target must lie in (0, |allowed|]");
  }

  const auto sum_at = [&](double alpha) {
    double s = 0.0;
    for (int c = 0; c < freq.num_classes; ++c) {
      if (!mask[c]) s += std::pow(freq.f[c], alpha);
    }
    return s;
  };

  // sum_at is strictly decreasing; sum_at(0) = |allowed| >= target.
  double lo = 0.0, hi = 64.0;
  while (sum_at(hi) > target) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e6) throw std::runtime_error("solve_alpha_exponent: no bracket found");
  }
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (sum_at(mid) > target) {
      lo = mid;
    } else {
      hi = mid;
    }
    if (hi - lo <= 1e-15 * (1.0 + hi)) break;
  }
  const double alpha = 0.5 * (lo + hi);
  if (std::abs(sum_at(alpha) - target) > 1e-9 * target) {
    throw std::runtime_error("solve_alpha_exponent: bisection failed to converge");
  }
  return alpha;
}

BernoulliConfig make_bernoulli_config(const FrequencyTable& freq,
                                      std::span<const ClassId> excluded,
                                      double expected_draws) {
  BernoulliConfig cfg;
  cfg.expected_draws = expected_draws;
  cfg.alpha = solve_alpha_exponent(freq, excluded, expected_draws);
  cfg.b.assign(freq.num_classes, 0.0);
  const auto mask = excluded_mask(freq.num_classes, excluded);
  for (int c = 0; c < freq.num_classes; ++c) {
    if (!mask[c]) cfg.b[c] = std::min(1.0, std::pow(freq.f[c], cfg.alpha));
  }
  return cfg;
}

ImportanceConfig make_importance_config(std::span<const double> proposal_weights,
                                        std::span<const ClassId> excluded, int num_draws) {
  if (num_draws < 1) throw std::invalid_argument("importance config: num_draws >= 1");
  const int num_classes = static_cast<int>(proposal_weights.size());
  const auto mask = excluded_mask(num_classes, excluded);
  ImportanceConfig cfg;
  cfg.num_draws = num_draws;
  cfg.q.assign(num_classes, 0.0);
  double total = 0.0;
  for (int c = 0; c < num_classes; ++c) {
    if (mask[c]) continue;
    if (!(proposal_weights[c] > 0.0)) {
      throw std::invalid_argument("importance config: every allowed class needs q > 0");
    }
    total += proposal_weights[c];
  }
  if (total <= 0.0) throw std::invalid_argument("importance config: empty allowed set");
  cfg.cdf.resize(num_classes);
  double acc = 0.0;
  for (int c = 0; c < num_classes; ++c) {
    if (!mask[c]) {
      cfg.q[c] = proposal_weights[c] / total;
      acc += cfg.q[c];
    }
    cfg.cdf[c] = acc;
  }
  cfg.cdf.back() = 1.0;
  return cfg;
}

ImportanceConfig make_importance_config(const FrequencyTable& freq,
                                        std::span<const ClassId> excluded, int num_draws) {
  return make_importance_config(freq.f, excluded, num_draws);
}

NegativeDraw bernoulli_draw(const BernoulliConfig& cfg, RngStream& rng) {
  NegativeDraw draw;
  for (int c = 0; c < static_cast<int>(cfg.b.size()); ++c) {
    const double b = cfg.b[c];
    if (b <= 0.0) continue;
    if (b >= 1.0 || rng.next_bernoulli(b)) {
      draw.classes.push_back(c);
      draw.kappa.push_back(1.0 / b);
    }
  }
  return draw;
}

namespace {

ClassId draw_from_cdf(const std::vector<double>& cdf, RngStream& rng) {
  const double u = rng.next_uniform();
  const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
  return static_cast<ClassId>(std::min<std::ptrdiff_t>(it - cdf.begin(),
                                                       static_cast<std::ptrdiff_t>(cdf.size()) - 1));
}

}  // namespace

NegativeDraw importance_draw(const ImportanceConfig& cfg, RngStream& rng) {
  NegativeDraw draw;
  draw.classes.reserve(cfg.num_draws);
  draw.kappa.reserve(cfg.num_draws);
  for (int s = 0; s < cfg.num_draws; ++s) {
    const ClassId d = draw_from_cdf(cfg.cdf, rng);
    draw.classes.push_back(d);
    draw.kappa.push_back(1.0 / (cfg.num_draws * cfg.q[d]));
  }
  return draw;
}

double estimate_z_importance(std::span<const double> z, const ImportanceConfig& cfg,
                             RngStream& rng) {
  if (z.size() != cfg.q.size()) {
    throw std::invalid_argument("estimate_z_importance: size mismatch");
  }
  double acc = 0.0;
  for (int s = 0; s < cfg.num_draws; ++s) {
    const ClassId d = draw_from_cdf(cfg.cdf, rng);
    acc += z[d] / cfg.q[d];
  }
  return acc / cfg.num_draws;
}

double estimate_z_bernoulli(std::span<const double> z, std::span<const double> b,
                            RngStream& rng) {
  if (z.size() != b.size()) throw std::invalid_argument("estimate_z_bernoulli: size mismatch");
  double acc = 0.0;
  for (std::size_t c = 0; c < z.size(); ++c) {
    if (!(b[c] > 0.0 && b[c] <= 1.0)) {
      throw std::invalid_argument("estimate_z_bernoulli: b must lie in (0, 1]");
    }
    if (b[c] >= 1.0 || rng.next_bernoulli(b[c])) acc += z[c] / b[c];
  }
  return acc;
}

double importance_variance(std::span<const double> z, std::span<const double> q,
                           int num_draws) {
  if (z.size() != q.size()) throw std::invalid_argument("importance_variance: size mismatch");
  if (num_draws < 1) throw std::invalid_argument("importance_variance: num_draws >= 1");
  double zsum = 0.0, ratio = 0.0;
  for (std::size_t c = 0; c < z.size(); ++c) {
    zsum += z[c];
    if (z[c] != 0.0) {
      if (!(q[c] > 0.0)) {
        throw std::invalid_argument("importance_variance: q = 0 on a class with z > 0");
      }
      ratio += z[c] * z[c] / q[c];
    }
  }
  return (ratio - zsum * zsum) / num_draws;
}

double bernoulli_variance(std::span<const double> z, std::span<const double> b) {
  if (z.size() != b.size()) throw std::invalid_argument("bernoulli_variance: size mismatch");
  double acc = 0.0;
  for (std::size_t c = 0; c < z.size(); ++c) {
    if (z[c] == 0.0) continue;
    if (!(b[c] > 0.0)) {
      throw std::invalid_argument("bernoulli_variance: b = 0 on a class with z > 0");
    }
    acc += (1.0 / b[c] - 1.0) * z[c] * z[c];
  }
  return acc;
}

}  // namespace manyclass
