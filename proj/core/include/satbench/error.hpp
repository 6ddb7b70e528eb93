#pragma once

#include <stdexcept>
#include <string>

namespace satbench {

/// Base class for every failure raised by the harness.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent corpus input.
class CorpusError : public Error {
 public:
  using Error::Error;
};

/// Missing or invalid prompt templates, or a render precondition violation.
class PromptError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// I/O failure on a durable store (run records or recordings).
class StoreError : public Error {
 public:
  using Error::Error;
};

class EvalError : public Error {
 public:
  using Error::Error;
};

enum class BackendFailure {
  kTransient,         // worth retrying: timeout, connection reset, 429, 5xx
  kRejected,          // non-retryable HTTP status
  kExhausted,         // retry cap reached
  kMalformed,         // response body did not follow the wire protocol
  kMissingRecording,  // strict replay miss
  kContextOverflow,   // instruction alone exceeds the context budget
  kInvalidRequest,
};

class BackendError : public Error {
 public:
  BackendError(BackendFailure failure, const std::string& what, int http_status = 0)
      : Error(what), failure_(failure), http_status_(http_status) {}

  BackendFailure failure() const noexcept { return failure_; }
  int http_status() const noexcept { return http_status_; }

 private:
  BackendFailure failure_;
  int http_status_;
};

}  // namespace satbench
