#pragma once

#include <stdexcept>
#include <string>

namespace lstsc {

// Broad failure classes. The CLI maps each one to a distinct exit code.
enum class ErrorKind {
  kInvalidArgument,  // bad shapes, out-of-range parameters, malformed config
  kIo,               // missing, unreadable or unwritable files
  kFormat,           // corrupt or unsupported file contents
  kConstraint,       // geometric or acoustic constraints cannot be met
  kNumeric,          // a measurement could not be formed from the data
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

namespace detail {

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

inline void require(bool condition, const std::string& what) {
  if (!condition) fail(ErrorKind::kInvalidArgument, what);
}

}  // namespace detail
}  // namespace lstsc
