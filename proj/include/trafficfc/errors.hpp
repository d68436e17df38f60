#pragma once

#include <stdexcept>
#include <string>

namespace trafficfc {

/// Bad or inconsistent input data: malformed files, empty or too-short
/// series, timestamps out of order. Maps to CLI exit code 1.
class data_error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration or arguments: unknown model names, out-of-range
/// options, incompatible series. Maps to CLI exit code 2.
class config_error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Numerical failure: factorization breakdown, optimizer divergence,
/// degenerate regressions. Maps to CLI exit code 3.
class numerical_error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

}  // namespace trafficfc
