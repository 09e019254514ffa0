#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace foliate {

/// Bad user input: manifests, expressions, parameters. CLI exit code 2.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Syntax or name-resolution failure in an expression, with byte offset.
class ParseError : public InputError {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : InputError(what + " at byte " + std::to_string(offset)), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

/// A theorem's hypothesis does not hold on the supplied data. CLI exit code 2.
class HypothesisError : public InputError {
 public:
  using InputError::InputError;
};

/// Numerical failure: singular metric, chart exit, blown tolerance on a
/// construction. CLI exit code 3.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Expression evaluated outside its domain (log of nonpositive, ...).
class DomainError : public NumericalError {
 public:
  DomainError(const std::string& what, const std::string& subexpr)
      : NumericalError(what + " in '" + subexpr + "'"), subexpr_(subexpr) {}
  const std::string& subexpression() const noexcept { return subexpr_; }

 private:
  std::string subexpr_;
};

}  // namespace foliate
