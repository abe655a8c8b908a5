#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>

#include "plgp/errors.hpp"

namespace plgp {

enum class KernelFamily { GaussianRBF, ScaledBase };

/// Covariance function spec. GaussianRBF is exp(-beta * ||x1-x2||^2).
/// ScaledBase is the rescaled family tau^-1 * k0(lambda*x1, lambda*x2)
/// with the RBF of bandwidth `beta` as the base kernel k0.
struct KernelSpec {
  KernelFamily family{KernelFamily::GaussianRBF};
  double beta{1.0};    // RBF bandwidth, 1/length^2
  double tau{1.0};     // inverse amplitude (ScaledBase only)
  double lambda{1.0};  // input scaling (ScaledBase only)

  static KernelSpec rbf(double beta) {
    KernelSpec s;
    s.family = KernelFamily::GaussianRBF;
    s.beta = beta;
    return s;
  }

  static KernelSpec scaled_rbf(double tau, double lambda, double base_beta = 1.0) {
    KernelSpec s;
    s.family = KernelFamily::ScaledBase;
    s.tau = tau;
    s.lambda = lambda;
    s.beta = base_beta;
    return s;
  }

  void validate() const {
    if (!(beta > 0.0)) throw config_error("kernel: beta must be positive");
    if (family == KernelFamily::ScaledBase) {
      if (!(tau > 0.0)) throw config_error("kernel: tau must be positive");
      if (!(lambda > 0.0)) throw config_error("kernel: lambda must be positive");
    }
  }
};

/// Kernel value from a squared distance. Shared by eval and gram so the
/// two can never disagree.
inline double kernel_from_sqdist(const KernelSpec& spec, double r2) {
  switch (spec.family) {
    case KernelFamily::GaussianRBF:
      return std::exp(-spec.beta * r2);
    case KernelFamily::ScaledBase:
      return std::exp(-spec.beta * spec.lambda * spec.lambda * r2) / spec.tau;
  }
  throw config_error("kernel: unknown family");
}

inline double kernel_eval(const KernelSpec& spec, const Eigen::VectorXd& x1,
                          const Eigen::VectorXd& x2) {
  spec.validate();
  if (x1.size() < 1 || x1.size() != x2.size())
    throw shape_error("kernel_eval: points must share dimension d >= 1, got " +
                      std::to_string(x1.size()) + " and " + std::to_string(x2.size()));
  return kernel_from_sqdist(spec, (x1 - x2).squaredNorm());
}

/// Matrix of pairwise squared distances between rows of A and rows of B.
inline Eigen::MatrixXd pairwise_sqdist(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
  if (A.cols() != B.cols())
    throw shape_error("pairwise_sqdist: point sets must share dimension, got " +
                      std::to_string(A.cols()) + " and " + std::to_string(B.cols()));
  // direct differences: no cancellation, and exact agreement with kernel_eval
  Eigen::MatrixXd d2(A.rows(), B.rows());
  for (Eigen::Index j = 0; j < B.rows(); ++j)
    for (Eigen::Index i = 0; i < A.rows(); ++i) d2(i, j) = (A.row(i) - B.row(j)).squaredNorm();
  return d2;
}

/// Gram matrix with entry (i,j) = kernel(A_i, B_j); rows of A/B are points.
inline Eigen::MatrixXd gram(const KernelSpec& spec, const Eigen::MatrixXd& A,
                            const Eigen::MatrixXd& B) {
  spec.validate();
  if (A.cols() < 1) throw shape_error("gram: point dimension must be >= 1");
  Eigen::MatrixXd K = pairwise_sqdist(A, B);
  for (Eigen::Index j = 0; j < K.cols(); ++j)
    for (Eigen::Index i = 0; i < K.rows(); ++i) K(i, j) = kernel_from_sqdist(spec, K(i, j));
  return K;
}

}  // namespace plgp
