#pragma once

#include <stdexcept>
#include <string>

namespace battlab {

/// Base class for every error this library raises on purpose.
/// Callers that only need "domain error vs. programming bug" can catch this.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// --- ingestion ---
class SchemaError : public Error {
public:
  using Error::Error;
};
class AmbiguityError : public Error {
public:
  using Error::Error;
};
class ParseError : public Error {
public:
  using Error::Error;
};
class IoError : public Error {
public:
  using Error::Error;
};
class InsufficientDataError : public Error {
public:
  using Error::Error;
};

// --- synthesis ---
class ProfileError : public Error {
public:
  using Error::Error;
};
class IndexError : public Error {
public:
  using Error::Error;
};

// --- analysis ---
class DegenerateTraceError : public Error {
public:
  using Error::Error;
};
class ArgumentError : public Error {
public:
  using Error::Error;
};
class RankError : public Error {
public:
  using Error::Error;
};
class DegenerateScaleError : public Error {
public:
  using Error::Error;
};
class AllFlaggedError : public Error {
public:
  using Error::Error;
};

// --- model ---
class ConfigError : public Error {
public:
  using Error::Error;
};
class ShapeError : public Error {
public:
  using Error::Error;
};
class DivergenceError : public Error {
public:
  using Error::Error;
};

// --- reporting ---
class NotFoundError : public Error {
public:
  using Error::Error;
};

} // namespace battlab
