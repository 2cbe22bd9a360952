#pragma once

#include <stdexcept>
#include <string>

namespace isrlab {

// Base for every domain error raised by the library. Tools map these to exit
// code 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace isrlab
