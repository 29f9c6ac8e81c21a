#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace nml {

// Shortest representation that parses back to the identical double
// (std::to_chars), so emitted text is both diffable and lossless.
std::string fmt_double(double v);

// Strict full-token parses; throw format_error naming `what` on failure.
double parse_double(std::string_view s, std::string_view what);
long long parse_ll(std::string_view s, std::string_view what);
unsigned long long parse_ull(std::string_view s, std::string_view what);

std::string_view trim(std::string_view s);
std::vector<std::string_view> split(std::string_view s, char delim);

// "a,b,c" or "a-b" ranges, e.g. "0-6,9"; values must be nonnegative.
std::vector<long long> parse_int_list(std::string_view s, std::string_view what);

// "v1,v2,..." or "start:step:end" (end inclusive within 1e-9 slack).
std::vector<double> parse_double_grid(std::string_view s, std::string_view what);

} // namespace nml
