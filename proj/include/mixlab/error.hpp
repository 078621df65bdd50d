#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mixlab {

enum class ErrorKind {
  kInvalidParameter,
  kCapacityExceeded,
  kNotGenerating,
  kUnsupported,
  kCapExceeded,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Exception carrying a machine-readable kind. Every failure that the
/// library reports to callers goes through this type.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

inline void require(bool condition, const std::string& message) {
  if (!condition) fail(ErrorKind::kInvalidParameter, message);
}

}  // namespace mixlab
