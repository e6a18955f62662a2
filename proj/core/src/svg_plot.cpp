#include "manyclass/svg_plot.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "manyclass/experiments.hpp"
#include "manyclass/text.hpp"

namespace manyclass {

namespace {

constexpr std::array<const char*, 10> kPalette = {
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
    "#8c564b", "#e377c2", "#17becf", "#bcbd22", "#7f7f7f"};

constexpr double kWidth = 880.0;
constexpr double kHeight = 520.0;
constexpr double kLeft = 72.0;
constexpr double kRight = kWidth - 190.0;
constexpr double kTop = 46.0;
constexpr double kBottom = kHeight - 54.0;

struct Series {
  std::string name;
  std::vector<std::pair<double, double>> points;  // (iteration, value)
};

std::string esc(const std::string& s) {
  std::string out;
  for (char ch : s) {
    switch (ch) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      default: out += ch;
    }
  }
  return out;
}

}  // namespace

std::string render_metric_svg(const std::vector<MetricsRecord>& rows,
                              const std::string& metric) {
  if (rows.empty()) throw std::runtime_error("no data rows to plot");

  double (*pick)(const MetricsRecord&) = nullptr;
  bool log_metric = false;
  if (metric == "exact_ll") {
    pick = [](const MetricsRecord& r) { return r.exact_ll; };
  } else if (metric == "bias") {
    pick = [](const MetricsRecord& r) { return r.bias; };
    log_metric = true;
  } else if (metric == "param_diff") {
    pick = [](const MetricsRecord& r) { return r.param_diff; };
    log_metric = true;
  } else {
    throw std::runtime_error("unknown metric column '" + metric +
                             "'; expected exact_ll, bias or param_diff");
  }

  std::vector<Series> series;
  for (const MetricsRecord& r : rows) {
    const double v = pick(r);
    if (!std::isfinite(v)) continue;
    // exact zeros on the log metrics are reported as the floor sentinel and
    // have no finite log-scale position
    if (log_metric && v <= log_metric_floor() + 1e-9) continue;
    auto it = std::find_if(series.begin(), series.end(),
                           [&](const Series& s) { return s.name == r.method; });
    if (it == series.end()) {
      series.push_back({r.method, {}});
      it = series.end() - 1;
    }
    it->points.emplace_back(static_cast<double>(r.iteration), v);
  }
  if (series.empty()) {
    throw std::runtime_error("no plottable points for metric '" + metric + "'");
  }

  double x_min = series[0].points[0].first, x_max = x_min;
  double y_min = series[0].points[0].second, y_max = y_min;
  for (const Series& s : series) {
    for (const auto& [x, y] : s.points) {
      x_min = std::min(x_min, x);
      x_max = std::max(x_max, x);
      y_min = std::min(y_min, y);
      y_max = std::max(y_max, y);
    }
  }
  if (x_max <= x_min) x_max = x_min + 1.0;
  if (y_max <= y_min) {
    y_min -= 1.0;
    y_max += 1.0;
  }
  const double y_pad = 0.04 * (y_max - y_min);
  y_min -= y_pad;
  y_max += y_pad;

  const auto sx = [&](double x) {
    return kLeft + (x - x_min) / (x_max - x_min) * (kRight - kLeft);
  };
  const auto sy = [&](double y) {
    return kBottom - (y - y_min) / (y_max - y_min) * (kBottom - kTop);
  };
  const auto fmt = [](double v) { return format_double_fixed(v, 2); };

  const std::string w = format_double_fixed(kWidth, 0);
  const std::string h = format_double_fixed(kHeight, 0);
  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
      << "\" viewBox=\"0 0 " << w << " " << h << "\">\n";
  out << "<rect width=\"" << w << "\" height=\"" << h << "\" fill=\"white\"/>\n";
  out << "<text x=\"" << fmt((kLeft + kRight) / 2)
      << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">"
      << esc(metric) << "</text>\n";

  // axes
  out << "<line x1=\"" << fmt(kLeft) << "\" y1=\"" << fmt(kBottom) << "\" x2=\""
      << fmt(kRight) << "\" y2=\"" << fmt(kBottom) << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << fmt(kLeft) << "\" y1=\"" << fmt(kTop) << "\" x2=\"" << fmt(kLeft)
      << "\" y2=\"" << fmt(kBottom) << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double tx = x_min + (x_max - x_min) * i / 4.0;
    const double ty = y_min + (y_max - y_min) * i / 4.0;
    out << "<line x1=\"" << fmt(sx(tx)) << "\" y1=\"" << fmt(kBottom) << "\" x2=\""
        << fmt(sx(tx)) << "\" y2=\"" << fmt(kBottom + 5) << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << fmt(sx(tx)) << "\" y=\"" << fmt(kBottom + 20)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
        << format_double_sig(tx, 6) << "</text>\n";
    out << "<line x1=\"" << fmt(kLeft - 5) << "\" y1=\"" << fmt(sy(ty)) << "\" x2=\""
        << fmt(kLeft) << "\" y2=\"" << fmt(sy(ty)) << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << fmt(kLeft - 8) << "\" y=\"" << fmt(sy(ty) + 4)
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
        << format_double_sig(ty, 4) << "</text>\n";
  }
  out << "<text x=\"" << fmt((kLeft + kRight) / 2) << "\" y=\"" << fmt(kHeight - 16)
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">iteration"
      << "</text>\n";

  for (std::size_t i = 0; i < series.size(); ++i) {
    const char* color = kPalette[i % kPalette.size()];
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t p = 0; p < series[i].points.size(); ++p) {
      if (p) out << ' ';
      out << fmt(sx(series[i].points[p].first)) << ',' << fmt(sy(series[i].points[p].second));
    }
    out << "\"/>\n";
    // legend entry
    const double ly = kTop + 8 + 18.0 * static_cast<double>(i);
    out << "<line x1=\"" << fmt(kRight + 10) << "\" y1=\"" << fmt(ly) << "\" x2=\""
        << fmt(kRight + 34) << "\" y2=\"" << fmt(ly) << "\" stroke=\"" << color
        << "\" stroke-width=\"2\"/>\n";
    out << "<text x=\"" << fmt(kRight + 40) << "\" y=\"" << fmt(ly + 4)
        << "\" font-family=\"sans-serif\" font-size=\"12\">" << esc(series[i].name)
        << "</text>\n";
  }
  out << "</svg>\n";
  return out.str();
}

}  // namespace manyclass
