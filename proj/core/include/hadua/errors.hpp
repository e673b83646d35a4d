// core/include/hadua/errors.hpp

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0

#ifndef HADUA_ERRORS_HPP_
#define HADUA_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace hadua {

// All failures surface as typed exceptions. The CLI maps types to exit
// codes: ConfigError -> 2, IoError -> 3, LeakageError -> 4, NumericError -> 5.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Tensor/operation shape disagreement.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration value or schema violation.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// NaN/Inf produced, or an estimator left its numeric domain.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Caller violated an operation precondition.
class ContractError : public Error {
 public:
  using Error::Error;
};

// Input is degenerate for the requested statistic (constant sequence,
// identical rows, empty soft classes, ...).
class DegenerateError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Target-domain labels became reachable from the training path.
class LeakageError : public Error {
 public:
  using Error::Error;
};

}  // namespace hadua

#endif  // HADUA_ERRORS_HPP_
