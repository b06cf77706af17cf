#pragma once

#include <stdexcept>
#include <string>

namespace peerfx {

enum class ErrorKind {
  InvalidArgument,
  IllConditioned,
  NoWithinVariation,
  DivisionDegenerate,
  InsufficientData,
  EmptySelection,
  ConfigError,
  DataError,
  IoError,
};

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

inline void require(bool condition, const std::string& message) {
  if (!condition) fail(ErrorKind::InvalidArgument, message);
}

}  // namespace peerfx
