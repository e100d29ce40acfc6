#pragma once

#include <charconv>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "modrel/errors.hpp"

namespace modrel::csv {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline std::optional<double> try_real(std::string_view s) {
  double v{};
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc{} || ptr != end || s.empty()) return std::nullopt;
  return v;
}

inline std::optional<long long> try_integer(std::string_view s) {
  long long v{};
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc{} || ptr != end || s.empty()) return std::nullopt;
  return v;
}

/// Line-oriented reader that skips blank lines and '#' comment lines and
/// tracks 1-based line numbers for error messages.
class Reader {
 public:
  Reader(std::istream& in, std::string source) : in_(in), source_(std::move(source)) {}

  bool next(std::vector<std::string_view>& fields) {
    while (std::getline(in_, line_)) {
      ++line_no_;
      const auto t = trim(line_);
      if (t.empty() || t.front() == '#') continue;
      fields = split(t);
      return true;
    }
    return false;
  }

  [[noreturn]] void fail(const std::string& what) const { throw parse_error(source_, line_no_, what); }

  double real(std::string_view s, const char* column) const {
    auto v = try_real(s);
    if (!v) fail(std::string("expected a number in column '") + column + "'");
    return *v;
  }

  long long integer(std::string_view s, const char* column) const {
    auto v = try_integer(s);
    if (!v) fail(std::string("expected an integer in column '") + column + "'");
    return *v;
  }

  void expect_columns(const std::vector<std::string_view>& fields, std::size_t n) const {
    if (fields.size() != n)
      fail("expected " + std::to_string(n) + " columns, found " + std::to_string(fields.size()));
  }

  // Verifies a header row against the expected column names.
  void expect_header(const std::vector<std::string_view>& fields,
                     std::initializer_list<std::string_view> names) const {
    std::size_t i = 0;
    bool ok = fields.size() == names.size();
    for (auto name : names) {
      if (!ok) break;
      ok = fields[i++] == name;
    }
    if (!ok) {
      std::string expected;
      for (auto name : names) expected += (expected.empty() ? "" : ",") + std::string(name);
      fail("header must be '" + expected + "'");
    }
  }

  std::size_t line() const noexcept { return line_no_; }

 private:
  std::istream& in_;
  std::string source_;
  std::string line_;
  std::size_t line_no_ = 0;
};

}  // namespace modrel::csv
