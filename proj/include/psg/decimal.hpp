#pragma once

#include <string>
#include <string_view>

namespace psg {

/// Shortest decimal string that parses back to exactly `value`.
std::string format_real(double value);

/// Parses a decimal string written by format_real (or any strtod input).
double parse_real(std::string_view text);

}  // namespace psg
