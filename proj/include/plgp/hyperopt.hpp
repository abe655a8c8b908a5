#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <random>
#include <vector>

#include "plgp/common.hpp"
#include "plgp/errors.hpp"
#include "plgp/model.hpp"

namespace plgp {

inline double log_marginal_likelihood(const ModelConfig& cfg, const Dataset& data) {
  return MarginalModel(cfg, data).log_marginal_likelihood();
}

namespace detail {

// Number of fitted log-parameters per kernel family.
inline int kernel_param_count(const KernelSpec& spec) {
  return spec.family == KernelFamily::ScaledBase ? 2 : 1;
}

inline void pack_kernel(const KernelSpec& spec, double* out) {
  if (spec.family == KernelFamily::ScaledBase) {
    out[0] = std::log(spec.tau);
    out[1] = std::log(spec.lambda);
  } else {
    out[0] = std::log(spec.beta);
  }
}

inline void unpack_kernel(KernelSpec& spec, const double* in) {
  if (spec.family == KernelFamily::ScaledBase) {
    spec.tau = std::exp(in[0]);
    spec.lambda = std::exp(in[1]);
  } else {
    spec.beta = std::exp(in[0]);
  }
}

// Derivative of the Gram matrix w.r.t. the kernel's log-parameter `which`,
// given the Gram matrix K and the squared-distance matrix D.
inline Eigen::MatrixXd gram_dlog(const KernelSpec& spec, int which, const Eigen::MatrixXd& K,
                                 const Eigen::MatrixXd& D) {
  if (spec.family == KernelFamily::ScaledBase) {
    if (which == 0) return -K;  // d/dlog tau
    // d/dlog lambda
    return (-2.0 * spec.beta * spec.lambda * spec.lambda) * D.cwiseProduct(K);
  }
  // d/dlog beta
  return (-spec.beta) * D.cwiseProduct(K);
}

struct ParamVector {
  static Eigen::VectorXd pack(const ModelConfig& cfg) {
    const int pt = kernel_param_count(cfg.kernel_theta);
    const int pf = kernel_param_count(cfg.kernel_f);
    Eigen::VectorXd x(pt + pf + 1);
    pack_kernel(cfg.kernel_theta, x.data());
    pack_kernel(cfg.kernel_f, x.data() + pt);
    x(pt + pf) = std::log(cfg.noise_precision);
    return x;
  }

  static ModelConfig unpack(const ModelConfig& families, const Eigen::VectorXd& x) {
    ModelConfig cfg = families;
    const int pt = kernel_param_count(cfg.kernel_theta);
    const int pf = kernel_param_count(cfg.kernel_f);
    unpack_kernel(cfg.kernel_theta, x.data());
    unpack_kernel(cfg.kernel_f, x.data() + pt);
    cfg.noise_precision = std::exp(x(pt + pf));
    return cfg;
  }
};

}  // namespace detail

/// Analytic gradient of the log marginal likelihood in log-parameter space.
/// Layout: kernel_theta params, then kernel_f params, then log(s_eps); for
/// two RBF kernels that is (log beta_theta, log beta_f, log s_eps).
inline Eigen::VectorXd lml_gradient(const ModelConfig& cfg, const Dataset& data) {
  cfg.validate();
  data.validate();
  const Eigen::Index n = data.n();
  const Eigen::MatrixXd D = pairwise_sqdist(data.x, data.x);
  const Eigen::MatrixXd phi = gram(cfg.kernel_theta, data.x, data.x);
  const Eigen::MatrixXd psi = gram(cfg.kernel_f, data.x, data.x);
  const Eigen::MatrixXd tt = data.t * data.t.transpose();
  const double s = cfg.noise_precision;
  const Eigen::MatrixXd K =
      tt.cwiseProduct(phi) + psi + (1.0 / s) * Eigen::MatrixXd::Identity(n, n);

  const JitteredCholesky chol = cholesky_jittered(K, 1e-8, "marginal covariance of y");
  const Eigen::VectorXd alpha = chol.solve(data.y);
  const Eigen::MatrixXd kinv = chol.solve_matrix(Eigen::MatrixXd::Identity(n, n));

  // dLML = 0.5 * alpha' dK alpha - 0.5 * tr(K^-1 dK)
  auto grad_for = [&](const Eigen::MatrixXd& dK) {
    return 0.5 * alpha.dot(dK * alpha) - 0.5 * kinv.cwiseProduct(dK).sum();
  };

  const int pt = detail::kernel_param_count(cfg.kernel_theta);
  const int pf = detail::kernel_param_count(cfg.kernel_f);
  Eigen::VectorXd g(pt + pf + 1);
  for (int j = 0; j < pt; ++j)
    g(j) = grad_for(tt.cwiseProduct(detail::gram_dlog(cfg.kernel_theta, j, phi, D)));
  for (int j = 0; j < pf; ++j)
    g(pt + j) = grad_for(detail::gram_dlog(cfg.kernel_f, j, psi, D));
  // d(s^-1 I)/dlog s = -s^-1 I
  g(pt + pf) = grad_for((-1.0 / s) * Eigen::MatrixXd::Identity(n, n));
  return g;
}

struct FitOptions {
  int restarts{5};      // includes the warm start as restart #0
  int max_iters{200};
  double tol{1e-8};     // on |delta LML|
  double grad_tol{1e-6};
  std::uint64_t seed{0};
  ModelConfig warm_start{};  // also fixes the kernel families being fitted
};

struct HyperFitResult {
  ModelConfig config;
  double log_marginal_likelihood{0.0};
  int restarts_run{0};
  std::vector<bool> converged;
};

/// Multi-start gradient ascent with Armijo backtracking on the log marginal
/// likelihood over log-parameters. Restart #0 is the warm start; the rest
/// are log-uniform on [1e-2, 1e2] per parameter. Deterministic given seed.
inline HyperFitResult fit_hyperparameters(const Dataset& data, const FitOptions& opts = {}) {
  data.validate();
  if (data.n() < 2) throw config_error("fit_hyperparameters: need n >= 2");
  if (opts.restarts < 1) throw config_error("fit_hyperparameters: restarts must be >= 1");
  opts.warm_start.validate();

  const Eigen::VectorXd x_warm = detail::ParamVector::pack(opts.warm_start);
  const int p = static_cast<int>(x_warm.size());

  // keep log-parameters inside [1e-6, 1e6] so exp never under/overflows
  constexpr double kLogBound = 13.815510557964274;
  auto clamp_params = [&](Eigen::VectorXd x) {
    return x.cwiseMax(-kLogBound).cwiseMin(kLogBound);
  };

  auto lml_at = [&](const Eigen::VectorXd& x, double& out) {
    try {
      out = log_marginal_likelihood(detail::ParamVector::unpack(opts.warm_start, x), data);
      return std::isfinite(out);
    } catch (const numerical_error&) {
      return false;
    }
  };

  std::mt19937_64 rng = make_rng(opts.seed, 0x68f1u);
  std::uniform_real_distribution<double> log_range(std::log(1e-2), std::log(1e2));

  HyperFitResult best;
  bool have_best = false;
  int usable_restarts = 0;

  for (int r = 0; r < opts.restarts; ++r) {
    Eigen::VectorXd x(p);
    if (r == 0) {
      x = x_warm;
    } else {
      for (int j = 0; j < p; ++j) x(j) = log_range(rng);
    }
    x = clamp_params(x);

    double value;
    if (!lml_at(x, value)) continue;
    ++usable_restarts;

    bool converged = false;
    double step = 1.0;
    for (int it = 0; it < opts.max_iters; ++it) {
      const Eigen::VectorXd g =
          lml_gradient(detail::ParamVector::unpack(opts.warm_start, x), data);
      if (g.cwiseAbs().maxCoeff() < opts.grad_tol) {
        converged = true;
        break;
      }
      // Armijo backtracking along the gradient; ascent is monotone because
      // a step is accepted only if it improves by the sufficient-decrease margin.
      const double g2 = g.squaredNorm();
      double alpha = step;
      bool accepted = false;
      for (int bt = 0; bt < 40; ++bt) {
        double cand_value;
        const Eigen::VectorXd cand = clamp_params(x + alpha * g);
        if (lml_at(cand, cand_value) && cand_value >= value + 1e-4 * alpha * g2) {
          const double gain = cand_value - value;
          x = cand;
          value = cand_value;
          accepted = true;
          step = std::min(alpha * 2.0, 64.0);
          if (gain < opts.tol) converged = true;
          break;
        }
        alpha *= 0.5;
      }
      if (!accepted || converged) break;  // stalled line search terminates the restart
    }

    best.converged.push_back(converged);
    // ties broken by restart order
    if (!have_best || value > best.log_marginal_likelihood) {
      best.config = detail::ParamVector::unpack(opts.warm_start, x);
      best.log_marginal_likelihood = value;
      have_best = true;
    }
  }

  if (!have_best)
    throw numerical_error("fit_hyperparameters: every restart failed to factorize");
  best.restarts_run = usable_restarts;
  return best;
}

}  // namespace plgp
