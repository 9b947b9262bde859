#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cds {

enum class ErrorCode {
  BadMagic,
  VersionMismatch,
  Truncated,
  NonFinite,
  ShapeMismatch,
  InvalidArgument,
  UnknownCondition,
  UnknownAdapter,
  Transport,
  Protocol,
  ServerError,
  NumericalAbort,
  Config,
  Io,
};

std::string_view to_string(ErrorCode code);

// Every failure raised by the engine carries a code so callers (the CLI in
// particular) can map it to an exit status without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace cds
