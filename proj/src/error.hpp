#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace tkd {

// All library failures surface as Error. The module tag names the subsystem
// that raised it so callers (CLI, C API) can report where things went wrong.
class Error : public std::runtime_error {
 public:
  Error(std::string module, const std::string& message)
      : std::runtime_error(module + ": " + message), module_(std::move(module)) {}

  const std::string& module() const noexcept { return module_; }

 private:
  std::string module_;
};

inline void require(bool condition, const char* module, const std::string& message) {
  if (!condition) {
    throw Error(module, message);
  }
}

}  // namespace tkd
