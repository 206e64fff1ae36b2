#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace extremal {

// Locale-independent numeric text helpers built on to_chars/from_chars.

// Accepts optional leading '+', decimal point only, scientific notation;
// surrounding whitespace is ignored. Empty or trailing garbage -> nullopt.
std::optional<double> parse_double(std::string_view text);

std::string format_g6(double v);    // 6 significant digits
std::string format_full(double v);  // shortest round-trip representation

}  // namespace extremal
