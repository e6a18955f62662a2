#include "manyclass/metrics_csv.hpp"

#include <array>
#include <fstream>
#include <ostream>
#include <stdexcept>

#include "manyclass/text.hpp"

namespace manyclass {

namespace {

constexpr std::array<const char*, 7> kColumns = {
    "iteration", "method", "exact_ll", "bias", "param_diff", "op_count", "wallclock_ms"};

}  // namespace

void write_metrics_csv(std::ostream& out, const CsvMetadata& metadata,
                       const ComparisonResult& result) {
  for (const auto& [key, value] : metadata) out << "# " << key << "=" << value << "\n";
  out << kMetricsCsvHeader << "\n";
  for (const MethodTrace& method : result.methods) {
    for (const MetricsRecord& r : method.trace.records) {
      out << r.iteration << ',' << r.method << ',' << format_double(r.exact_ll) << ','
          << format_double(r.bias) << ',' << format_double(r.param_diff) << ','
          << r.op_count << ',' << r.wallclock_ms << "\n";
    }
  }
}

void write_metrics_csv(const std::string& path, const CsvMetadata& metadata,
                       const ComparisonResult& result) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  write_metrics_csv(out, metadata, result);
  out.flush();
  if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

MetricsCsv read_metrics_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "' for reading");
  MetricsCsv csv;
  std::string line;
  bool have_header = false;
  std::array<int, kColumns.size()> column_index{};
  int num_columns = 0;
  while (std::getline(in, line)) {
    const std::string_view trimmed = trim(line);
    if (trimmed.empty()) continue;
    if (trimmed.front() == '#') {
      std::string_view body = trim(trimmed.substr(1));
      const std::size_t eq = body.find('=');
      if (eq != std::string_view::npos) {
        csv.metadata.emplace_back(std::string(trim(body.substr(0, eq))),
                                  std::string(trim(body.substr(eq + 1))));
      }
      continue;
    }
    const std::vector<std::string> fields = split(std::string(trimmed), ',');
    if (!have_header) {
      for (std::size_t c = 0; c < kColumns.size(); ++c) {
        int found = -1;
        for (std::size_t j = 0; j < fields.size(); ++j) {
          if (trim(fields[j]) == kColumns[c]) {
            found = static_cast<int>(j);
            break;
          }
        }
        if (found < 0) {
          throw std::runtime_error(std::string("results CSV is missing column '") +
                                   kColumns[c] + "'");
        }
        column_index[c] = found;
      }
      num_columns = static_cast<int>(fields.size());
      have_header = true;
      continue;
    }
    if (static_cast<int>(fields.size()) != num_columns) {
      throw std::runtime_error("results CSV row has wrong field count: '" + line + "'");
    }
    MetricsRecord r;
    r.iteration = parse_int(fields[column_index[0]]);
    r.method = std::string(trim(fields[column_index[1]]));
    r.exact_ll = parse_double(fields[column_index[2]]);
    r.bias = parse_double(fields[column_index[3]]);
    r.param_diff = parse_double(fields[column_index[4]]);
    r.op_count = parse_int(fields[column_index[5]]);
    r.wallclock_ms = parse_int(fields[column_index[6]]);
    csv.rows.push_back(std::move(r));
  }
  if (!have_header) {
    throw std::runtime_error("results CSV '" + path + "' has no header line");
  }
  return csv;
}

}  // namespace manyclass
