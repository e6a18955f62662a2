#include "manyclass/dataset_io.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "manyclass/text.hpp"

namespace manyclass {

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "' for reading");
  return in;
}

std::string next_line(std::ifstream& in, const std::string& path) {
  std::string line;
  if (!std::getline(in, line)) {
    throw std::runtime_error("unexpected end of file in '" + path + "'");
  }
  return line;
}

void write_row(std::ofstream& out, const double* row, int cols) {
  for (int j = 0; j < cols; ++j) {
    if (j) out << ' ';
    out << format_double(row[j]);
  }
  out << '\n';
}

void parse_row(const std::string& line, double* row, int cols, const std::string& path) {
  std::size_t start = 0;
  for (int j = 0; j < cols; ++j) {
    while (start < line.size() && line[start] == ' ') ++start;
    std::size_t end = line.find(' ', start);
    if (end == std::string::npos) end = line.size();
    if (start >= end) throw std::runtime_error("short row in '" + path + "'");
    row[j] = parse_double(std::string_view(line).substr(start, end - start));
    start = end;
  }
  while (start < line.size() && line[start] == ' ') ++start;
  if (start != line.size()) throw std::runtime_error("trailing fields in '" + path + "'");
}

}  // namespace

void write_dataset(const std::string& path, const Dataset& data) {
  data.validate();
  std::ofstream out = open_out(path);
  out << data.size() << ' ' << data.dim() << ' ' << data.num_classes << '\n';
  for (int i = 0; i < data.size(); ++i) write_row(out, data.inputs.row(i), data.dim());
  for (int i = 0; i < data.size(); ++i) out << data.labels[i] << '\n';
  out.flush();
  if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

Dataset read_dataset(const std::string& path) {
  std::ifstream in = open_in(path);
  const std::string header = next_line(in, path);
  std::istringstream hs(header);
  long long n = 0, d = 0, c = 0;
  if (!(hs >> n >> d >> c) || n < 1 || d < 1 || c < 1) {
    throw std::runtime_error("bad dataset header in '" + path + "' (want: N D C)");
  }
  Dataset data;
  data.inputs = Matrix(static_cast<int>(n), static_cast<int>(d));
  data.num_classes = static_cast<int>(c);
  for (int i = 0; i < data.size(); ++i) {
    parse_row(next_line(in, path), data.inputs.row(i), data.dim(), path);
  }
  data.labels.resize(data.size());
  for (int i = 0; i < data.size(); ++i) {
    data.labels[i] = static_cast<ClassId>(parse_int(next_line(in, path)));
  }
  data.validate();
  return data;
}

void write_matrix(const std::string& path, const Matrix& m) {
  std::ofstream out = open_out(path);
  out << m.rows << ' ' << m.cols << '\n';
  for (int i = 0; i < m.rows; ++i) write_row(out, m.row(i), m.cols);
  out.flush();
  if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

Matrix read_matrix(const std::string& path) {
  std::ifstream in = open_in(path);
  const std::string header = next_line(in, path);
  std::istringstream hs(header);
  long long r = 0, c = 0;
  if (!(hs >> r >> c) || r < 1 || c < 1) {
    throw std::runtime_error("bad matrix header in '" + path + "' (want: R C)");
  }
  Matrix m(static_cast<int>(r), static_cast<int>(c));
  for (int i = 0; i < m.rows; ++i) parse_row(next_line(in, path), m.row(i), m.cols, path);
  return m;
}

}  // namespace manyclass
