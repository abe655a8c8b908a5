#pragma once

#include <Eigen/Dense>
#include <string>

#include "plgp/errors.hpp"
#include "plgp/gaussian.hpp"
#include "plgp/kernels.hpp"

namespace plgp {

/// Observed sample: covariates (rows), binary treatment, outcome.
struct Dataset {
  Eigen::MatrixXd x;  // n x d
  Eigen::VectorXd t;  // entries in {0,1}
  Eigen::VectorXd y;

  Eigen::Index n() const { return x.rows(); }
  Eigen::Index dim() const { return x.cols(); }

  void validate() const {
    if (n() < 1 || dim() < 1) throw shape_error("Dataset: need n >= 1 and d >= 1");
    if (t.size() != n() || y.size() != n())
      throw shape_error("Dataset: x, t, y must agree on n");
    for (Eigen::Index i = 0; i < n(); ++i) {
      if (t(i) != 0.0 && t(i) != 1.0)
        throw shape_error("Dataset: treatment must be binary, row " + std::to_string(i));
      if (!std::isfinite(y(i)) || !x.row(i).allFinite())
        throw shape_error("Dataset: non-finite value at row " + std::to_string(i));
    }
  }
};

struct ModelConfig {
  KernelSpec kernel_theta{};  // prior covariance of the effect function
  KernelSpec kernel_f{};      // prior covariance of the nuisance function
  double noise_precision{1.0};

  void validate() const {
    kernel_theta.validate();
    kernel_f.validate();
    if (!(noise_precision > 0.0)) throw config_error("ModelConfig: noise_precision must be positive");
  }
};

/// Gaussian posterior over the effect function at query points.
struct PosteriorPredictive {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

/// Prior covariance of (theta_train, theta_query, f_train), size (n+m+n).
/// The theta and f blocks are independent a priori, so their cross blocks
/// are exactly zero.
inline Eigen::MatrixXd joint_covariance(const ModelConfig& cfg, const Eigen::MatrixXd& X,
                                        const Eigen::MatrixXd& Xq) {
  cfg.validate();
  if (X.rows() < 1 || Xq.rows() < 1) throw shape_error("joint_covariance: empty point set");
  if (X.cols() != Xq.cols()) throw shape_error("joint_covariance: X and Xq dimension mismatch");
  const Eigen::Index n = X.rows(), m = Xq.rows();
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(2 * n + m, 2 * n + m);
  cov.topLeftCorner(n, n) = gram(cfg.kernel_theta, X, X);
  cov.block(0, n, n, m) = gram(cfg.kernel_theta, X, Xq);
  cov.block(n, 0, m, n) = cov.block(0, n, n, m).transpose();
  cov.block(n, n, m, m) = gram(cfg.kernel_theta, Xq, Xq);
  cov.bottomRightCorner(n, n) = gram(cfg.kernel_f, X, X);
  return cov;
}

/// Precision matrix of the joint over (theta_train, theta_query, f, y),
/// size (3n+m). Requires inverting the theta and f prior blocks, so it is
/// only suitable for small instances; the production posterior never
/// touches it. Kept as the reference route for equivalence checks.
inline Eigen::MatrixXd joint_precision(const ModelConfig& cfg, const Dataset& data,
                                       const Eigen::MatrixXd& Xq, double jitter0 = 1e-8) {
  cfg.validate();
  data.validate();
  if (Xq.rows() < 1) throw shape_error("joint_precision: empty query set");
  if (data.dim() != Xq.cols()) throw shape_error("joint_precision: dimension mismatch");
  const Eigen::Index n = data.n(), m = Xq.rows();
  const double s = cfg.noise_precision;

  Eigen::MatrixXd phi(n + m, n + m);
  phi.topLeftCorner(n, n) = gram(cfg.kernel_theta, data.x, data.x);
  phi.topRightCorner(n, m) = gram(cfg.kernel_theta, data.x, Xq);
  phi.bottomLeftCorner(m, n) = phi.topRightCorner(n, m).transpose();
  phi.bottomRightCorner(m, m) = gram(cfg.kernel_theta, Xq, Xq);
  const Eigen::MatrixXd psi = gram(cfg.kernel_f, data.x, data.x);

  const Eigen::MatrixXd eye_nm = Eigen::MatrixXd::Identity(n + m, n + m);
  const Eigen::MatrixXd eye_n = Eigen::MatrixXd::Identity(n, n);
  const Eigen::MatrixXd phi_inv =
      cholesky_jittered(phi, jitter0, "theta prior block").solve_matrix(eye_nm);
  const Eigen::MatrixXd psi_inv =
      cholesky_jittered(psi, jitter0, "f prior block").solve_matrix(eye_n);

  const Eigen::Index total = 3 * n + m;
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(total, total);
  // block-diagonal prior precision plus the noise terms
  S.topLeftCorner(n + m, n + m) = phi_inv;
  S.block(n + m, n + m, n, n) = psi_inv;
  S.bottomRightCorner(n, n) = s * eye_n;

  // likelihood coupling; every theta_query row/column stays zero
  const Eigen::VectorXd t = data.t;
  const Eigen::Index f0 = n + m, y0 = 2 * n + m;
  S.topLeftCorner(n, n) += (s * t.array() * t.array()).matrix().asDiagonal();
  S.block(0, f0, n, n) += (s * t.array()).matrix().asDiagonal();
  S.block(f0, 0, n, n) += (s * t.array()).matrix().asDiagonal();
  S.block(0, y0, n, n) -= (s * t.array()).matrix().asDiagonal();
  S.block(y0, 0, n, n) -= (s * t.array()).matrix().asDiagonal();
  S.block(f0, f0, n, n) += s * eye_n;
  S.block(f0, y0, n, n) -= s * eye_n;
  S.block(y0, f0, n, n) -= s * eye_n;
  return 0.5 * (S + S.transpose());
}

/// Fitted model: caches the factor of the marginal covariance of y,
/// cov(y) = T*Phi_nn*T + Psi_nn + s^-1 I. Immutable after construction;
/// predictions at different query sets may run concurrently.
class MarginalModel {
 public:
  MarginalModel(const ModelConfig& cfg, const Dataset& data, double jitter0 = 1e-8)
      : cfg_(cfg), data_(data), jitter0_(jitter0) {
    cfg.validate();
    data.validate();
    const Eigen::Index n = data.n();
    const Eigen::MatrixXd phi_nn = gram(cfg.kernel_theta, data.x, data.x);
    psi_nn_ = gram(cfg.kernel_f, data.x, data.x);
    Eigen::MatrixXd kyy =
        (data.t * data.t.transpose()).cwiseProduct(phi_nn) + psi_nn_ +
        (1.0 / cfg.noise_precision) * Eigen::MatrixXd::Identity(n, n);
    kyy_chol_ = cholesky_jittered(kyy, jitter0, "marginal covariance of y");
    kyy_log_det_ = kyy_chol_.log_det();
  }

  const ModelConfig& config() const { return cfg_; }
  const Dataset& data() const { return data_; }

  /// Posterior over theta at the query points. cross-cov(theta_q, y) is
  /// Phi_mn * T, so all-control data yields the prior back exactly.
  PosteriorPredictive predict_cate(const Eigen::MatrixXd& Xq) const {
    if (Xq.rows() < 1) throw shape_error("predict_cate: empty query set");
    if (Xq.cols() != data_.dim()) throw shape_error("predict_cate: query dimension mismatch");
    const Eigen::MatrixXd phi_mn = gram(cfg_.kernel_theta, Xq, data_.x);
    Eigen::MatrixXd cross = phi_mn;  // m x n, column j scaled by t_j
    for (Eigen::Index j = 0; j < data_.n(); ++j) cross.col(j) *= data_.t(j);
    return conditioned(gram(cfg_.kernel_theta, Xq, Xq), cross);
  }

  /// Posterior over f at the training points; with t identically zero this
  /// is plain GP regression of y on X under kernel_f.
  PosteriorPredictive outcome_fit() const { return conditioned(psi_nn_, psi_nn_); }

  /// Exact Gaussian log-density of y under the marginal.
  double log_marginal_likelihood() const {
    const Eigen::VectorXd alpha = kyy_chol_.solve(data_.y);
    const double n = static_cast<double>(data_.n());
    return -0.5 * (n * std::log(2.0 * M_PI) + kyy_log_det_ + data_.y.dot(alpha));
  }

  const JitteredCholesky& marginal_factor() const { return kyy_chol_; }

 private:
  PosteriorPredictive conditioned(const Eigen::MatrixXd& prior_cov,
                                  const Eigen::MatrixXd& cross) const {
    PosteriorPredictive out;
    out.mean = cross * kyy_chol_.solve(data_.y);
    Eigen::MatrixXd cov = prior_cov - cross * kyy_chol_.solve_matrix(cross.transpose());
    out.cov = 0.5 * (cov + cov.transpose());
    return out;
  }

  ModelConfig cfg_;
  Dataset data_;
  double jitter0_;
  Eigen::MatrixXd psi_nn_;
  JitteredCholesky kyy_chol_;
  double kyy_log_det_{0.0};
};

inline PosteriorPredictive posterior_cate(const ModelConfig& cfg, const Dataset& data,
                                          const Eigen::MatrixXd& Xq) {
  return MarginalModel(cfg, data).predict_cate(Xq);
}

inline PosteriorPredictive posterior_outcome_fit(const ModelConfig& cfg, const Dataset& data) {
  return MarginalModel(cfg, data).outcome_fit();
}

}  // namespace plgp
