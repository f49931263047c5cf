#pragma once

#include <stdexcept>
#include <string>

namespace hsps {

/// Base of all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration or arguments, detected before any simulation.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Malformed input text. Line is 1-based; 0 when unknown.
class ParseError : public ValidationError {
 public:
  ParseError(const std::string& what, int line = 0, std::string field = {})
      : ValidationError(what), line_(line), field_(std::move(field)) {}

  int line() const { return line_; }
  const std::string& field() const { return field_; }

 private:
  int line_;
  std::string field_;
};

/// Expected event volume exceeds the in-memory budget; use streaming output.
class BudgetError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// A ratio whose denominator is zero.
class UndefinedRatioError : public Error {
 public:
  using Error::Error;
};

/// A search did not reach its tolerance; carries the best residual found.
class NoConvergenceError : public Error {
 public:
  NoConvergenceError(const std::string& what, double best_residual)
      : Error(what), best_residual_(best_residual) {}

  double best_residual() const { return best_residual_; }

 private:
  double best_residual_;
};

/// No candidate satisfies the constraint; carries the best achievable value.
class InfeasibleError : public Error {
 public:
  InfeasibleError(const std::string& what, double best_achievable)
      : Error(what), best_achievable_(best_achievable) {}

  double best_achievable() const { return best_achievable_; }

 private:
  double best_achievable_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace hsps
