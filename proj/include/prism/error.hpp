#pragma once

#include <stdexcept>
#include <string>

namespace prism {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// llm_client
class BackendError : public Error {
 public:
  using Error::Error;
};
class AuthError : public BackendError {
 public:
  using BackendError::BackendError;
};
class RateLimited : public BackendError {
 public:
  using BackendError::BackendError;
};
class MalformedUpstream : public BackendError {
 public:
  using BackendError::BackendError;
};
class ScriptExhausted : public BackendError {
 public:
  using BackendError::BackendError;
};
class ScriptMismatch : public BackendError {
 public:
  using BackendError::BackendError;
};

class ParseFailure : public Error {
 public:
  using Error::Error;
};

class MissingBinding : public Error {
 public:
  explicit MissingBinding(std::string placeholder)
      : Error("missing binding for placeholder [" + placeholder + "]"),
        placeholder_(std::move(placeholder)) {}
  const std::string& placeholder() const noexcept { return placeholder_; }

 private:
  std::string placeholder_;
};

// retriever
class DuplicateTitle : public Error {
 public:
  using Error::Error;
};
class UnknownDoc : public Error {
 public:
  using Error::Error;
};

// datasets
class SchemaError : public Error {
 public:
  using Error::Error;
};
class MissingFile : public Error {
 public:
  using Error::Error;
};
class SampleTooLarge : public Error {
 public:
  using Error::Error;
};

// eval
class UnsupportedDataset : public Error {
 public:
  using Error::Error;
};
class EmptyInput : public Error {
 public:
  using Error::Error;
};

// cli
class IdMismatch : public Error {
 public:
  using Error::Error;
};
class ConfigError : public Error {
 public:
  using Error::Error;
};
class DivergenceFound : public Error {
 public:
  using Error::Error;
};

}  // namespace prism
