#pragma once

#include <stdexcept>
#include <string>

namespace carmine {

// Single exception type for all library failures. The CLI decides the exit
// code from the phase in which it was thrown (validation vs. stage run).
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace carmine
