#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <random>
#include <string>

#include "plgp/errors.hpp"

namespace plgp {

/// Lower-triangular Cholesky factor of M + jitter*I, where jitter is the
/// smallest rung of the escalation ladder that factorizes.
struct JitteredCholesky {
  Eigen::MatrixXd lower;
  double jitter{0.0};

  Eigen::Index dim() const { return lower.rows(); }

  // (L L^T)^{-1} b via two triangular solves; no inverse is formed.
  Eigen::VectorXd solve(const Eigen::VectorXd& b) const {
    Eigen::VectorXd z = lower.triangularView<Eigen::Lower>().solve(b);
    return lower.transpose().triangularView<Eigen::Upper>().solve(z);
  }

  Eigen::MatrixXd solve_matrix(const Eigen::MatrixXd& B) const {
    Eigen::MatrixXd Z = lower.triangularView<Eigen::Lower>().solve(B);
    return lower.transpose().triangularView<Eigen::Upper>().solve(Z);
  }

  // log det(M + jitter*I)
  double log_det() const { return 2.0 * lower.diagonal().array().log().sum(); }
};

/// Cholesky with jitter escalation: tries delta in
/// {0, jitter0, 10*jitter0, ..., 1e6*jitter0} and returns the first factor
/// that succeeds along with the delta used.
inline JitteredCholesky cholesky_jittered(const Eigen::MatrixXd& M, double jitter0 = 1e-8,
                                          const std::string& label = "matrix") {
  if (M.rows() != M.cols()) throw shape_error("cholesky_jittered: " + label + " is not square");
  if (!(jitter0 > 0.0)) throw config_error("cholesky_jittered: jitter0 must be positive");
  const double asym = (M - M.transpose()).cwiseAbs().maxCoeff();
  const double scale = std::max(1.0, M.cwiseAbs().maxCoeff());
  if (asym > 1e-8 * scale)
    throw shape_error("cholesky_jittered: " + label + " is not symmetric");
  const Eigen::MatrixXd sym = 0.5 * (M + M.transpose());

  double delta = 0.0;
  for (int step = 0; step <= 7; ++step) {
    Eigen::LLT<Eigen::MatrixXd> llt(
        sym + delta * Eigen::MatrixXd::Identity(sym.rows(), sym.cols()));
    if (llt.info() == Eigen::Success) {
      JitteredCholesky out;
      out.lower = llt.matrixL();
      out.jitter = delta;
      return out;
    }
    delta = (step == 0) ? jitter0 : delta * 10.0;
  }
  throw numerical_error("cholesky_jittered: " + label +
                        " not positive definite after jitter up to 1e6*jitter0");
}

struct MvnDistribution {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;

  Eigen::Index dim() const { return mean.size(); }

  void validate() const {
    if (cov.rows() != dim() || cov.cols() != dim())
      throw shape_error("MvnDistribution: cov must be k x k with k = mean length");
  }
};

/// Conditional of the leading block given the observed trailing block.
/// joint is over (a, b) with b the last observed_b.size() coordinates.
inline MvnDistribution condition(const MvnDistribution& joint,
                                 const Eigen::VectorXd& observed_b, double jitter0 = 1e-8) {
  joint.validate();
  const Eigen::Index k = joint.dim();
  const Eigen::Index nb = observed_b.size();
  if (nb < 1 || nb >= k)
    throw shape_error("condition: observed block length must be in [1, k-1]");
  const Eigen::Index na = k - nb;

  const Eigen::MatrixXd cov_aa = joint.cov.topLeftCorner(na, na);
  const Eigen::MatrixXd cov_ab = joint.cov.topRightCorner(na, nb);
  const Eigen::MatrixXd cov_bb = joint.cov.bottomRightCorner(nb, nb);

  const JitteredCholesky chol = cholesky_jittered(cov_bb, jitter0, "conditioning block");
  const Eigen::MatrixXd gain = chol.solve_matrix(cov_ab.transpose()).transpose();  // cov_ab cov_bb^-1

  MvnDistribution out;
  out.mean = joint.mean.head(na) + gain * (observed_b - joint.mean.tail(nb));
  Eigen::MatrixXd cov = cov_aa - gain * cov_ab.transpose();
  out.cov = 0.5 * (cov + cov.transpose());
  return out;
}

/// i.i.d. draws via L*z + mean, one per row; deterministic given the RNG state.
inline Eigen::MatrixXd sample(const MvnDistribution& dist, std::mt19937_64& rng, int count,
                              double jitter0 = 1e-8) {
  dist.validate();
  if (count < 1) throw config_error("sample: count must be positive");
  const JitteredCholesky chol = cholesky_jittered(dist.cov, jitter0, "sampling covariance");
  std::normal_distribution<double> std_normal(0.0, 1.0);
  const Eigen::Index k = dist.dim();
  Eigen::MatrixXd draws(count, k);
  Eigen::VectorXd z(k);
  for (int r = 0; r < count; ++r) {
    for (Eigen::Index i = 0; i < k; ++i) z(i) = std_normal(rng);
    draws.row(r) = (dist.mean + chol.lower.triangularView<Eigen::Lower>() * z).transpose();
  }
  return draws;
}

/// Gaussian log-density, computed through the Cholesky factor.
inline double log_pdf(const MvnDistribution& dist, const Eigen::VectorXd& x,
                      double jitter0 = 1e-8) {
  dist.validate();
  if (x.size() != dist.dim()) throw shape_error("log_pdf: point dimension mismatch");
  const JitteredCholesky chol = cholesky_jittered(dist.cov, jitter0, "density covariance");
  const Eigen::VectorXd w =
      chol.lower.triangularView<Eigen::Lower>().solve(x - dist.mean);
  const double k = static_cast<double>(dist.dim());
  return -0.5 * (k * std::log(2.0 * M_PI) + chol.log_det() + w.squaredNorm());
}

}  // namespace plgp
