#pragma once

#include <stdexcept>
#include <string>

namespace mpr {

// Invalid input: malformed files, bad flag values, violated preconditions.
// The CLI maps this to exit code 2.
class input_error : public std::runtime_error {
 public:
  explicit input_error(const std::string& what) : std::runtime_error(what) {}
};

// A request whose exact computation would exceed the configured enumeration
// limits. The library refuses rather than approximating. CLI exit code 3.
class guard_error : public std::runtime_error {
 public:
  explicit guard_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace mpr
