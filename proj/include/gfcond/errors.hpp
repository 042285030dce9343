#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace gfcond {

// Runtime error carrying a stable machine-readable code next to the human
// message. Codes are part of the CLI contract (they map to exit codes).
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& what)
      : std::runtime_error(what), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

[[noreturn]] inline void fail(std::string code, const std::string& what) {
  throw Error(std::move(code), what);
}

}  // namespace gfcond
