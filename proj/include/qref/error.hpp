#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

namespace qref {

/// Failure families. The CLI maps each to a distinct exit code.
enum class ErrorKind {
  Config,      // bad or missing configuration, unknown signal kinds, bad generator spec
  Validation,  // input data violates a documented invariant or schema
  Io,          // file system failures, refusal to overwrite
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  Error(ErrorKind kind, const std::string& message, std::size_t line,
        std::optional<std::uint64_t> offset = std::nullopt)
      : std::runtime_error(message), kind_(kind), line_(line), offset_(offset) {}

  ErrorKind kind() const noexcept { return kind_; }
  std::optional<std::size_t> line() const noexcept { return line_; }
  std::optional<std::uint64_t> offset() const noexcept { return offset_; }

 private:
  ErrorKind kind_;
  std::optional<std::size_t> line_;
  std::optional<std::uint64_t> offset_;
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Config: return "config";
    case ErrorKind::Validation: return "validation";
    case ErrorKind::Io: return "io";
  }
  return "unknown";
}

[[noreturn]] inline void config_error(const std::string& message) {
  throw Error(ErrorKind::Config, message);
}

[[noreturn]] inline void validation_error(const std::string& message) {
  throw Error(ErrorKind::Validation, message);
}

[[noreturn]] inline void io_error(const std::string& message) {
  throw Error(ErrorKind::Io, message);
}

}  // namespace qref
