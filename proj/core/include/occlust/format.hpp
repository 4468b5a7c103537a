#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace occlust {

/// Shortest decimal text that parses back to the same double; "nan" for NaN.
std::string format_real(double value);

/// Parses text written by format_real. Throws ErrorKind::validation.
double parse_real(std::string_view text);

/// Minimal CSV field splitting (no quoting; fields never contain commas).
std::vector<std::string> split_csv_line(std::string_view line);

}  // namespace occlust
