#pragma once

#include <string>
#include <vector>

#include "manyclass/trainer.hpp"

namespace manyclass {

// Renders one metric column ("exact_ll", "bias" or "param_diff") as an SVG
// line chart with one polyline per method and a legend. Floor-sentinel points
// (exact zeros on the log metrics) are omitted from the polylines. Output is
// deterministic for identical input. Throws std::runtime_error when the rows
// are empty, the metric name is unknown, or nothing is plottable.
std::string render_metric_svg(const std::vector<MetricsRecord>& rows,
                              const std::string& metric);

}  // namespace manyclass
