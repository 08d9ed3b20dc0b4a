#pragma once

#include <stdexcept>
#include <string>

namespace gendetect {

// Malformed inputs: bad files, unknown labels, shape mismatches, invalid
// config. The CLI maps these to exit code 2.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Failures while fitting models: divergent optimization, empty classes.
// The CLI maps these to exit code 3.
class TrainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace gendetect
