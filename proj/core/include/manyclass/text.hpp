#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace manyclass {

// Locale-independent shortest round-trip formatting (std::to_chars).
std::string format_double(double v);
std::string format_double_fixed(double v, int precision);
std::string format_double_sig(double v, int significant_digits);

// Strict locale-independent parsing; throws std::runtime_error on garbage.
double parse_double(std::string_view s);
long long parse_int(std::string_view s);

std::vector<std::string> split(std::string_view s, char delim);
std::string_view trim(std::string_view s);

}  // namespace manyclass
