#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <numeric>
#include <string>
#include <vector>

#include "plgp/common.hpp"
#include "plgp/errors.hpp"
#include "plgp/model.hpp"

namespace plgp {

struct DmlConfig {
  int folds{2};
  double ridge{1e-8};
  std::uint64_t seed{0};

  void validate() const {
    if (folds < 2) throw config_error("DmlConfig: folds must be >= 2");
    if (ridge < 0.0) throw config_error("DmlConfig: ridge must be nonnegative");
  }
};

namespace detail {

// Least squares with intercept and ridge on the slope block.
inline Eigen::VectorXd ridge_linear_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                        double ridge) {
  const Eigen::Index n = X.rows(), d = X.cols();
  Eigen::MatrixXd Z(n, d + 1);
  Z.col(0).setOnes();
  Z.rightCols(d) = X;
  Eigen::MatrixXd A = Z.transpose() * Z;
  A.diagonal().tail(d).array() += ridge;
  return A.ldlt().solve(Z.transpose() * y);
}

inline Eigen::VectorXd linear_predict(const Eigen::VectorXd& coef, const Eigen::MatrixXd& X) {
  return Eigen::VectorXd::Constant(X.rows(), coef(0)) + X * coef.tail(X.cols());
}

// Logistic regression by damped Newton iterations.
inline Eigen::VectorXd logistic_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& t,
                                    double ridge, int max_steps = 100, double tol = 1e-10) {
  const Eigen::Index n = X.rows(), d = X.cols();
  Eigen::MatrixXd Z(n, d + 1);
  Z.col(0).setOnes();
  Z.rightCols(d) = X;

  Eigen::VectorXd w = Eigen::VectorXd::Zero(d + 1);
  auto log_lik = [&](const Eigen::VectorXd& coef) {
    const Eigen::ArrayXd eta = (Z * coef).array();
    // t*eta - log(1+exp(eta)), stable form
    return (t.array() * eta - eta.max(0.0) - (-eta.abs()).exp().log1p()).sum() -
           0.5 * ridge * coef.tail(d).squaredNorm();
  };

  double ll = log_lik(w);
  for (int step = 0; step < max_steps; ++step) {
    const Eigen::ArrayXd eta = (Z * w).array();
    const Eigen::ArrayXd p = 1.0 / (1.0 + (-eta).exp());
    const Eigen::ArrayXd wts = (p * (1.0 - p)).max(1e-10);
    Eigen::VectorXd grad = Z.transpose() * (t.array() - p).matrix();
    grad.tail(d) -= ridge * w.tail(d);
    Eigen::MatrixXd H = Z.transpose() * wts.matrix().asDiagonal() * Z;
    H.diagonal().tail(d).array() += ridge;
    H.diagonal().array() += 1e-12;
    const Eigen::VectorXd dir = H.ldlt().solve(grad);

    double damp = 1.0;
    bool moved = false;
    for (int bt = 0; bt < 30; ++bt) {
      const Eigen::VectorXd cand = w + damp * dir;
      const double cand_ll = log_lik(cand);
      if (std::isfinite(cand_ll) && cand_ll >= ll) {
        moved = cand_ll - ll > tol;
        w = cand;
        ll = cand_ll;
        break;
      }
      damp *= 0.5;
    }
    if (!moved) break;
  }
  return w;
}

inline Eigen::VectorXd logistic_predict(const Eigen::VectorXd& coef, const Eigen::MatrixXd& X) {
  const Eigen::ArrayXd eta =
      (Eigen::VectorXd::Constant(X.rows(), coef(0)) + X * coef.tail(X.cols())).array();
  return (1.0 / (1.0 + (-eta).exp())).matrix();
}

// Deterministic fold assignment: shuffle of indices keyed by (seed, n).
inline std::vector<int> fold_of(Eigen::Index n, int folds, std::uint64_t seed) {
  std::vector<int> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng = make_rng(seed, static_cast<std::uint64_t>(n));
  std::shuffle(idx.begin(), idx.end(), rng);
  std::vector<int> fold(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) fold[static_cast<std::size_t>(idx[i])] = static_cast<int>(i % folds);
  return fold;
}

}  // namespace detail

/// Cross-fitted linear DML estimate of the effect function at the query
/// points. Nuisances E[Y|X] (linear least squares) and E[T|X] (logistic
/// regression) are fitted on each fold's complement; the final stage fits
/// theta(x) = c0 + c'x to the residual-on-residual moment with ridge.
inline Eigen::VectorXd dml_linear_cate(const Dataset& data, const Eigen::MatrixXd& Xq,
                                       const DmlConfig& cfg = {}) {
  cfg.validate();
  data.validate();
  if (Xq.cols() != data.dim()) throw shape_error("dml_linear_cate: query dimension mismatch");
  const Eigen::Index n = data.n(), d = data.dim();
  if (cfg.folds > n) throw config_error("dml_linear_cate: folds must not exceed n");
  if (n < 2 * (d + 2)) throw config_error("dml_linear_cate: need n >= 2*(d+2)");

  const std::vector<int> fold = detail::fold_of(n, cfg.folds, cfg.seed);
  Eigen::VectorXd y_res(n), t_res(n);

  for (int k = 0; k < cfg.folds; ++k) {
    std::vector<Eigen::Index> in, out;
    for (Eigen::Index i = 0; i < n; ++i) (fold[static_cast<std::size_t>(i)] == k ? out : in).push_back(i);
    Eigen::MatrixXd x_in(in.size(), d);
    Eigen::VectorXd y_in(in.size()), t_in(in.size());
    for (std::size_t r = 0; r < in.size(); ++r) {
      x_in.row(static_cast<Eigen::Index>(r)) = data.x.row(in[r]);
      y_in(static_cast<Eigen::Index>(r)) = data.y(in[r]);
      t_in(static_cast<Eigen::Index>(r)) = data.t(in[r]);
    }
    const double treated = t_in.sum();
    if (treated == 0.0 || treated == static_cast<double>(t_in.size()))
      throw estimation_error("dml_linear_cate: fold " + std::to_string(k) +
                             " training split is all-control or all-treated");

    const Eigen::VectorXd outcome_coef = detail::ridge_linear_fit(x_in, y_in, cfg.ridge);
    const Eigen::VectorXd prop_coef = detail::logistic_fit(x_in, t_in, cfg.ridge);
    for (Eigen::Index i : out) {
      const Eigen::MatrixXd xi = data.x.row(i);
      y_res(i) = data.y(i) - detail::linear_predict(outcome_coef, xi)(0);
      t_res(i) = data.t(i) - detail::logistic_predict(prop_coef, xi)(0);
    }
  }

  // final stage: minimize sum_i (y_res_i - (c0 + c'x_i) t_res_i)^2 + ridge|c|^2
  Eigen::MatrixXd Z(n, d + 1);
  Z.col(0) = t_res;
  for (Eigen::Index j = 0; j < d; ++j) Z.col(j + 1) = data.x.col(j).cwiseProduct(t_res);
  Eigen::MatrixXd A = Z.transpose() * Z;
  A.diagonal().array() += cfg.ridge;
  const Eigen::VectorXd c = A.ldlt().solve(Z.transpose() * y_res);
  return Eigen::VectorXd::Constant(Xq.rows(), c(0)) + Xq * c.tail(d);
}

}  // namespace plgp
