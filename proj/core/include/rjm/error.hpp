#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace rjm {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed serialization. `offset()` is the byte position reported by the reader.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : Error(what + " (at byte " + std::to_string(offset) + ")"), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

/// Well-formed input that violates the record schema (missing or out-of-range field).
class SchemaError : public Error {
 public:
  SchemaError(std::string field, const std::string& what)
      : Error("field '" + field + "': " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class LabelError : public Error {
 public:
  using Error::Error;
};

class ArgumentError : public Error {
 public:
  using Error::Error;
};

class LookupError : public Error {
 public:
  using Error::Error;
};

class TrainingError : public Error {
 public:
  using Error::Error;
};

/// An upstream artifact is missing, has the wrong version, or was produced
/// under a different configuration. `stage()` names the stage to rerun.
class StaleArtifactError : public Error {
 public:
  StaleArtifactError(std::string stage, const std::string& what)
      : Error(what + " (rerun stage '" + stage + "')"), stage_(std::move(stage)) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

class LeakageError : public Error {
 public:
  using Error::Error;
};

}  // namespace rjm
