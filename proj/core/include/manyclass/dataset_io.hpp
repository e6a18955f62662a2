#pragma once

#include <string>

#include "manyclass/types.hpp"

namespace manyclass {

// Dataset file: a header line "N D C", then N lines of D space-separated
// reals, then N lines with one integer label each. Matrix file: a header line
// "R C" followed by R rows. Values are written in shortest round-trip form so
// rewrites are byte-identical.

void write_dataset(const std::string& path, const Dataset& data);
Dataset read_dataset(const std::string& path);

void write_matrix(const std::string& path, const Matrix& m);
Matrix read_matrix(const std::string& path);

}  // namespace manyclass
