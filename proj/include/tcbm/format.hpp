#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace tcbm {

// Shortest decimal representation that parses back to the same double.
std::string format_double(double value);

// Strict parse of a whole token; throws std::invalid_argument on trailing junk.
double parse_double(std::string_view text);

std::vector<std::string> split(std::string_view text, char separator);
std::string_view trim(std::string_view text);

// One CSV line (LF-terminated) from already formatted cells.
std::string csv_row(std::span<const std::string> cells);
std::string csv_row(std::span<const double> values);

}  // namespace tcbm
