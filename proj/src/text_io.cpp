#include "beamsense/text_io.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace beamsense {

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view s) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw std::runtime_error("parse_double: invalid number '" + std::string(s) + "'");
  }
  return v;
}

void write_doubles(std::ostream& out, std::string_view tag, std::span<const double> values) {
  out << tag << ' ' << values.size();
  for (double v : values) out << ' ' << format_double(v);
  out << '\n';
}

void expect_token(std::istream& in, std::string_view token) {
  std::string got;
  if (!(in >> got) || got != token) {
    throw std::runtime_error("expected '" + std::string(token) + "', got '" + got + "'");
  }
}

std::vector<double> read_doubles(std::istream& in, std::string_view tag) {
  expect_token(in, tag);
  std::size_t n = 0;
  if (!(in >> n)) throw std::runtime_error("read_doubles: missing count for " + std::string(tag));
  std::vector<double> out(n);
  std::string tok;
  for (auto& v : out) {
    if (!(in >> tok)) throw std::runtime_error("read_doubles: truncated " + std::string(tag));
    v = parse_double(tok);
  }
  return out;
}

void read_doubles(std::istream& in, std::string_view tag, std::span<double> values) {
  const std::vector<double> got = read_doubles(in, tag);
  if (got.size() != values.size()) {
    throw std::runtime_error("read_doubles: " + std::string(tag) + " has " + std::to_string(got.size()) +
                             " values, expected " + std::to_string(values.size()));
  }
  std::copy(got.begin(), got.end(), values.begin());
}

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> out;
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    std::string_view field = line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
    while (!field.empty() && field.front() == ' ') field.remove_prefix(1);
    while (!field.empty() && field.back() == ' ') field.remove_suffix(1);
    out.emplace_back(field);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace beamsense
