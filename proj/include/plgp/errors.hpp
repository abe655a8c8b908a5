#pragma once

#include <stdexcept>
#include <string>

namespace plgp {

// Input matrices/vectors with inconsistent dimensions.
struct shape_error : std::invalid_argument {
  explicit shape_error(const std::string& what) : std::invalid_argument(what) {}
};

// Invalid configuration values (non-positive hyperparameters etc.).
struct config_error : std::invalid_argument {
  explicit config_error(const std::string& what) : std::invalid_argument(what) {}
};

// Factorization or other numerical failure.
struct numerical_error : std::runtime_error {
  explicit numerical_error(const std::string& what) : std::runtime_error(what) {}
};

// Estimator-specific failure (degenerate folds etc.).
struct estimation_error : std::runtime_error {
  explicit estimation_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace plgp
