#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace simtrans {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A documented precondition of an operation was not met by the caller.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// Retryable failure talking to an ASR or completion backend.
class TransientError : public Error {
 public:
  using Error::Error;
};

/// A fresh transcription no longer covers the words already committed.
class ReconciliationError : public Error {
 public:
  using Error::Error;
};

/// The generation budget ran out before a word boundary or end of turn.
class OverflowError : public Error {
 public:
  using Error::Error;
};

/// Structured text could not be parsed. `position` is a byte offset.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t position)
      : Error(what), position_(position) {}
  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

/// Parsed document does not satisfy the expected schema.
class SchemaError : public Error {
 public:
  using Error::Error;
};

/// No background document could be recovered from a model response.
class ExtractionError : public Error {
 public:
  using Error::Error;
};

/// Metric is undefined for the given input (e.g. empty hypothesis for AL).
class UndefinedMetricError : public Error {
 public:
  using Error::Error;
};

/// Malformed arguments to a pure computation (length mismatch, zero audio).
class InputError : public Error {
 public:
  using Error::Error;
};

/// Dataset manifest, fixture or record file failed validation.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Audio file is not 16 kHz 16-bit mono PCM.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Invalid harness configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace simtrans
