#pragma once

#include <stdexcept>
#include <string>

namespace fgba {

// Thrown when a numerical routine rejects its input or fails to converge
// (e.g. a matrix that is not a generator, or a rank-deficient phase model).
struct numerical_error : std::runtime_error {
  explicit numerical_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace fgba
