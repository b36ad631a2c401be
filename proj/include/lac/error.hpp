#pragma once

#include <stdexcept>
#include <string>

namespace lac {

// Base class for all engine errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Bad flags, manifests, or prompt templates.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Invalid numeric or structural input to a pure operation.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Transport-level backend failure. Retryable when the request may be reissued.
class BackendError : public Error {
 public:
  BackendError(const std::string& what, bool retryable)
      : Error(what), retryable_(retryable) {}
  bool retryable() const { return retryable_; }

 private:
  bool retryable_;
};

// The backend answered, but the payload does not match the wire contract.
class ProtocolError : public Error {
 public:
  using Error::Error;
};

// The backend cannot serve this kind of request at all (e.g. no logprobs).
class UnsupportedCapabilityError : public Error {
 public:
  using Error::Error;
};

// The actor could not produce a single candidate action.
class ActorExhaustedError : public Error {
 public:
  using Error::Error;
};

// The critic has no usable marker-probability source.
class CriticUnavailableError : public Error {
 public:
  using Error::Error;
};

// The oracle's state mirror no longer matches the prompt it was asked about.
class OracleDesyncError : public Error {
 public:
  using Error::Error;
};

}  // namespace lac
