#pragma once

#include <stdexcept>
#include <string>

namespace ser {

/// Base class for every error thrown by this library.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Tensor/parameter extents disagree.
struct ShapeError : Error {
  explicit ShapeError(const std::string& msg) : Error(msg) {}
};

/// An argument value is outside its documented domain.
struct ValueError : Error {
  explicit ValueError(const std::string& msg) : Error(msg) {}
};

/// Filesystem problem (missing directory, unwritable output).
struct IoError : Error {
  explicit IoError(const std::string& msg) : Error(msg) {}
};

/// A byte stream does not satisfy its format contract.
struct ParseError : Error {
  explicit ParseError(const std::string& msg) : Error(msg) {}
};

struct MalformedHeaderError : ParseError {
  explicit MalformedHeaderError(const std::string& msg) : ParseError(msg) {}
};

struct UnsupportedEncodingError : ParseError {
  explicit UnsupportedEncodingError(const std::string& msg) : ParseError(msg) {}
};

struct TruncatedDataError : ParseError {
  explicit TruncatedDataError(const std::string& msg) : ParseError(msg) {}
};

/// A filename carries no recognized emotion token.
struct LabelError : Error {
  explicit LabelError(const std::string& msg) : Error(msg) {}
};

/// The training loop had to abort (non-finite loss, empty dataset).
struct TrainingError : Error {
  explicit TrainingError(const std::string& msg) : Error(msg) {}
};

}  // namespace ser
