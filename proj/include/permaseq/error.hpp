#pragma once

#include <stdexcept>
#include <string>

namespace permaseq {

// Single error type for precondition violations, numeric refusals and
// internal-consistency failures. The message carries the diagnostic.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace permaseq
