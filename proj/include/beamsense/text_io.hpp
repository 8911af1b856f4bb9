#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace beamsense {

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);
double parse_double(std::string_view s);

/// "<tag> <count> v0 v1 ...\n" with round-trip exact values.
void write_doubles(std::ostream& out, std::string_view tag, std::span<const double> values);
/// Reads a line written by write_doubles; the count must equal values.size().
void read_doubles(std::istream& in, std::string_view tag, std::span<double> values);
std::vector<double> read_doubles(std::istream& in, std::string_view tag);

/// Throws std::runtime_error unless the next whitespace-delimited token is `token`.
void expect_token(std::istream& in, std::string_view token);

/// Comma-split without quoting support; fields are trimmed of surrounding spaces.
std::vector<std::string> split_csv_line(std::string_view line);

}  // namespace beamsense
