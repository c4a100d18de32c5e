#pragma once

#include <stdexcept>
#include <string>

namespace ggm {

// Thrown when a numerical safety cap binds (series truncation limit,
// sampling window too small): the computation cannot reach the requested
// accuracy with the given budget.
class NumericalError : public std::runtime_error {
  public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace ggm
