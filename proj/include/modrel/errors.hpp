#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace modrel {

// Bad argument or violated precondition. Maps to CLI exit code 2.
class domain_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Configuration problem; the message carries the offending field path.
class validation_error : public domain_error {
 public:
  validation_error(const std::string& field, const std::string& what)
      : domain_error(field + ": " + what), field_(field) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

// Malformed input file.
class parse_error : public domain_error {
 public:
  parse_error(const std::string& source, std::size_t line, const std::string& what)
      : domain_error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class reachability_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Likelihood maximization failed. Keeps the per-iteration log-likelihood trace.
class estimation_error : public std::runtime_error {
 public:
  estimation_error(const std::string& what, std::vector<double> trace)
      : std::runtime_error(what), trace_(std::move(trace)) {}
  const std::vector<double>& trace() const noexcept { return trace_; }

 private:
  std::vector<double> trace_;
};

}  // namespace modrel
