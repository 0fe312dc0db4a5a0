#pragma once

#include <stdexcept>
#include <string>

namespace glarify {

/// Base of every error the toolkit throws on purpose.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Bad input data: malformed records, invariant violations, schema mismatch.
class DataError : public Error {
  public:
    using Error::Error;
};

/// Caller passed arguments that violate a precondition.
class UsageError : public Error {
  public:
    using Error::Error;
};

/// The chat-completion service (or its replay stand-in) could not answer.
class ServiceError : public Error {
  public:
    explicit ServiceError(const std::string& what, int status = 0)
        : Error(what), status_(status) {}

    /// HTTP status of the last attempt, 0 when no response was received.
    [[nodiscard]] int status() const noexcept { return status_; }

  private:
    int status_;
};

}  // namespace glarify
