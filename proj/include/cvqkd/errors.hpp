#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace cvqkd {

// Raised when one or more input fields violate their preconditions. Every
// offending field is collected so callers can report them all at once.
class ValidationError : public std::invalid_argument {
 public:
  explicit ValidationError(std::vector<std::string> problems);

  const std::vector<std::string>& problems() const noexcept { return problems_; }

 private:
  std::vector<std::string> problems_;
};

// Raised when an iterative numerical routine (quadrature, root finding) does
// not reach its tolerance. The message carries the diagnostics.
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised when a statistical estimator does not have enough samples.
class InsufficientDataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Accumulates field problems and throws a single ValidationError.
class FieldChecker {
 public:
  void require(bool ok, std::string message) {
    if (!ok) problems_.push_back(std::move(message));
  }
  bool ok() const noexcept { return problems_.empty(); }
  const std::vector<std::string>& problems() const noexcept { return problems_; }
  void merge(const FieldChecker& other) {
    problems_.insert(problems_.end(), other.problems_.begin(), other.problems_.end());
  }
  void throw_if_failed() const {
    if (!problems_.empty()) throw ValidationError(problems_);
  }

 private:
  std::vector<std::string> problems_;
};

}  // namespace cvqkd
