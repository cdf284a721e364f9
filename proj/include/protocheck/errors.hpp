#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace protocheck {

// Base for every error this library raises on purpose. Anything else escaping
// the library is a bug.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Structurally invalid input (bad interleaving, broken invariant).
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Text that could not be parsed. Line and column are 1-based; column is 0
// when only the line is known.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, std::size_t column, const std::string& message)
      : Error(format(line, column, message)), line_(line), column_(column), message_(message) {}

  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }
  const std::string& message() const noexcept { return message_; }

 private:
  static std::string format(std::size_t line, std::size_t column, const std::string& message) {
    std::string out = "line " + std::to_string(line);
    if (column != 0) out += ", column " + std::to_string(column);
    return out + ": " + message;
  }

  std::size_t line_;
  std::size_t column_;
  std::string message_;
};

// Action labels in a requirement set that the backend cannot resolve.
class LinkError : public Error {
 public:
  explicit LinkError(std::vector<std::string> missing)
      : Error(format(missing)), missing_(std::move(missing)) {}

  const std::vector<std::string>& missing() const noexcept { return missing_; }

 private:
  static std::string format(const std::vector<std::string>& missing) {
    std::string out = "unresolvable action labels:";
    for (const auto& label : missing) out += " '" + label + "'";
    return out;
  }

  std::vector<std::string> missing_;
};

// A predicate backend failed to produce a boolean.
class BackendError : public Error {
 public:
  using Error::Error;
};

// Backend failure attributed to one utterance of an evaluated window.
class PredicateError : public BackendError {
 public:
  PredicateError(std::size_t index, const std::string& action, const std::string& cause)
      : BackendError("predicate '" + action + "' failed on utterance " + std::to_string(index) +
                     ": " + cause),
        index_(index),
        cause_(cause) {}

  std::size_t index() const noexcept { return index_; }
  const std::string& cause() const noexcept { return cause_; }

 private:
  std::size_t index_;
  std::string cause_;
};

// Stored data disagrees with itself (dangling witness, missing trace, ...).
class IntegrityError : public Error {
 public:
  using Error::Error;
};

class NotFoundError : public Error {
 public:
  using Error::Error;
};

// Operation not permitted in the current lifecycle state.
class StateError : public Error {
 public:
  using Error::Error;
};

class AuthorizationError : public Error {
 public:
  using Error::Error;
};

// A compliance plan that cannot be realized as a trace.
class GenerationError : public Error {
 public:
  GenerationError(std::string requirement_id, const std::string& message)
      : Error("requirement '" + requirement_id + "': " + message),
        requirement_id_(std::move(requirement_id)) {}

  const std::string& requirement_id() const noexcept { return requirement_id_; }

 private:
  std::string requirement_id_;
};

}  // namespace protocheck
