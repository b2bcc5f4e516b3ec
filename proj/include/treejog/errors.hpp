#pragma once

#include <stdexcept>
#include <string>

namespace treejog {

// Bad or inconsistent input: malformed files, label mismatches, invalid
// parameters. The CLI maps this to exit code 1.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A well-formed input that the numerics cannot handle: degenerate PCA,
// zero-likelihood features, empty simulations. The CLI maps this to exit
// code 2.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace treejog
