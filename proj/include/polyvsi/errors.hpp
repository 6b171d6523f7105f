#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace polyvsi {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SingularBranch : public Error {
 public:
  using Error::Error;
};

class AsymmetricParameter : public Error {
 public:
  using Error::Error;
};

/// The block eliminated by a Kron reduction or hybrid partition is singular.
class SingularInteriorBlock : public Error {
 public:
  using Error::Error;
};

class SingularThevenin : public Error {
 public:
  using Error::Error;
};

class ZeroVoltage : public Error {
 public:
  using Error::Error;
};

class DegenerateDenominator : public Error {
 public:
  using Error::Error;
};

/// A node, resource or coefficient set violates its construction invariants.
class InvalidModel : public Error {
 public:
  using Error::Error;
};

class SingularJacobian : public Error {
 public:
  using Error::Error;
};

class NonConvergence : public Error {
 public:
  NonConvergence(const std::string& what, std::vector<double> residual_history)
      : Error(what), history_(std::move(residual_history)) {}

  /// Residual norm before each iteration, in the solver's normalized units.
  const std::vector<double>& residual_history() const noexcept { return history_; }

 private:
  std::vector<double> history_;
};

class BaseCaseDiverged : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& source, int line, int column, const std::string& message)
      : Error(source + ":" + std::to_string(line) + ":" + std::to_string(column) + ": " + message),
        line_(line),
        column_(column) {}

  int line() const noexcept { return line_; }
  int column() const noexcept { return column_; }

 private:
  int line_;
  int column_;
};

class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<std::string> violations)
      : Error(join(violations)), violations_(std::move(violations)) {}

  const std::vector<std::string>& violations() const noexcept { return violations_; }

 private:
  static std::string join(const std::vector<std::string>& items) {
    std::string out = "grid validation failed";
    for (const auto& item : items) out += "\n  " + item;
    return out;
  }

  std::vector<std::string> violations_;
};

class MissingData : public Error {
 public:
  using Error::Error;
};

}  // namespace polyvsi
