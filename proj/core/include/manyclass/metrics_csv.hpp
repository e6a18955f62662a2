#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "manyclass/experiments.hpp"
#include "manyclass/trainer.hpp"

namespace manyclass {

// Results CSV schema:
//   iteration,method,exact_ll,bias,param_diff,op_count,wallclock_ms
// preceded by '#'-prefixed "key=value" metadata lines recording the full
// configuration. Decimal separator is always '.'.

inline constexpr const char* kMetricsCsvHeader =
    "iteration,method,exact_ll,bias,param_diff,op_count,wallclock_ms";

using CsvMetadata = std::vector<std::pair<std::string, std::string>>;

void write_metrics_csv(std::ostream& out, const CsvMetadata& metadata,
                       const ComparisonResult& result);
void write_metrics_csv(const std::string& path, const CsvMetadata& metadata,
                       const ComparisonResult& result);

struct MetricsCsv {
  CsvMetadata metadata;
  std::vector<MetricsRecord> rows;
};

// Strict reader; throws std::runtime_error naming the first missing column or
// malformed row.
MetricsCsv read_metrics_csv(const std::string& path);

}  // namespace manyclass
