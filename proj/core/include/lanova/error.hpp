#pragma once

#include <stdexcept>
#include <string>

namespace lanova {

// Raised when the data or model state makes an operation undefined
// (degenerate modes, zero variance, non-finite input, ...).
class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace lanova
