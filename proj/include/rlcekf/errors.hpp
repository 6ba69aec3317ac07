#pragma once

#include <stdexcept>
#include <string>

namespace rlcekf {

/// Invalid configuration or arguments. Maps to CLI exit code 1.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input data (CSV, policy files). Exit code 2.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Numerical breakdown: divergence, singular innovation, non-finite loss. Exit code 3.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Innovation covariance too ill-conditioned to invert; the update can be skipped.
class SingularInnovation : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Quaternion norm collapsed during normalization.
class FilterDivergence : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace rlcekf
