#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace genearl {

// Base of every error the library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input document. `context` names the offending line or field.
class ParseError : public Error {
 public:
  ParseError(const std::string& context, const std::string& message)
      : Error(context.empty() ? message : context + ": " + message),
        context_(context) {}
  const std::string& context() const noexcept { return context_; }

 private:
  std::string context_;
};

// Well-formed input that violates a domain invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Bad run configuration or command-line flags.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Unreadable image or other unusable backend input.
class InputError : public Error {
 public:
  using Error::Error;
};

// Failure talking to a model service. `transient` marks errors worth retrying.
class BackendError : public Error {
 public:
  BackendError(const std::string& message, bool transient = false,
               std::size_t attempts = 1)
      : Error(message), transient_(transient), attempts_(attempts) {}

  bool transient() const noexcept { return transient_; }
  std::size_t attempts() const noexcept { return attempts_; }

 private:
  bool transient_;
  std::size_t attempts_;
};

class EmptyResponseError : public BackendError {
 public:
  explicit EmptyResponseError(const std::string& message)
      : BackendError(message, false) {}
};

class ContextOverflowError : public BackendError {
 public:
  ContextOverflowError(const std::string& message, std::size_t estimated,
                       std::size_t budget)
      : BackendError(message, false), estimated_(estimated), budget_(budget) {}

  std::size_t estimated_tokens() const noexcept { return estimated_; }
  std::size_t budget_tokens() const noexcept { return budget_; }

 private:
  std::size_t estimated_;
  std::size_t budget_;
};

// The backend does not implement the requested operation.
class CapabilityError : public BackendError {
 public:
  explicit CapabilityError(const std::string& message)
      : BackendError(message, false) {}
};

// The backend answered, but the answer breaks the contract (e.g. ragged
// embedding batch).
class ContractError : public BackendError {
 public:
  explicit ContractError(const std::string& message)
      : BackendError(message, false) {}
};

class MissingEmbeddingError : public BackendError {
 public:
  explicit MissingEmbeddingError(const std::string& key)
      : BackendError("no embedding stored for key '" + key + "'", false),
        key_(key) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

}  // namespace genearl
