#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "plgp/common.hpp"
#include "plgp/errors.hpp"
#include "plgp/gaussian.hpp"
#include "plgp/kernels.hpp"
#include "plgp/model.hpp"

namespace plgp {

enum class FunctionSource { GpDraw, RandomLinear };
enum class PropensityModel { LogisticLinear, LogisticGpDraw };

/// Data-generating process. Covariates are uniform on [-1,1]^d; treatment
/// is confounded through a clipped logistic propensity so that the overlap
/// condition holds by construction.
struct SimSpec {
  int n{100};
  int m{50};
  int d{2};
  FunctionSource theta_source{FunctionSource::GpDraw};
  FunctionSource f_source{FunctionSource::GpDraw};
  KernelSpec theta_kernel{KernelSpec::rbf(1.0)};
  KernelSpec f_kernel{KernelSpec::rbf(1.0)};
  double noise_precision{1.0};
  PropensityModel propensity{PropensityModel::LogisticLinear};
  double clip{0.05};
  std::uint64_t seed{0};

  void validate() const {
    if (n < 1 || m < 1) throw config_error("SimSpec: n and m must be >= 1");
    if (d < 1) throw config_error("SimSpec: d must be >= 1");
    if (!(clip > 0.0 && clip < 0.5)) throw config_error("SimSpec: clip must lie in (0, 0.5)");
    if (!(noise_precision > 0.0)) throw config_error("SimSpec: noise_precision must be positive");
    theta_kernel.validate();
    f_kernel.validate();
  }
};

/// Simulated sample plus the retained ground truth needed for scoring.
struct SimOutput {
  Dataset data;
  Eigen::MatrixXd x_query;          // m x d
  Eigen::VectorXd true_cate;        // theta at the query points
  Eigen::VectorXd true_f_at_train;  // f at the training points
  Eigen::VectorXd propensities;     // p(T=1 | x_i), already clipped
};

namespace detail {

inline Eigen::MatrixXd uniform_points(std::mt19937_64& rng, int rows, int cols) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::MatrixXd p(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) p(i, j) = u(rng);
  return p;
}

// Function values at `points`: either an exact finite-dimensional GP draw
// or w'x with standard-normal coefficients.
inline Eigen::VectorXd draw_function(FunctionSource source, const KernelSpec& kernel,
                                     const Eigen::MatrixXd& points, std::mt19937_64& rng) {
  if (source == FunctionSource::RandomLinear) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::VectorXd w(points.cols());
    for (Eigen::Index j = 0; j < w.size(); ++j) w(j) = gauss(rng);
    return points * w;
  }
  MvnDistribution prior;
  prior.mean = Eigen::VectorXd::Zero(points.rows());
  prior.cov = gram(kernel, points, points);
  return sample(prior, rng, 1).row(0).transpose();
}

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace detail

/// Deterministic simulation per the spec'd generative model,
/// y_i = theta(x_i) t_i + f(x_i) + eps_i. Independent RNG substreams per
/// ingredient keep the query points fixed across sample sizes for a given seed.
inline SimOutput simulate(const SimSpec& spec) {
  spec.validate();
  std::mt19937_64 rng_x = make_rng(spec.seed, 1);
  std::mt19937_64 rng_q = make_rng(spec.seed, 2);
  std::mt19937_64 rng_theta = make_rng(spec.seed, 3);
  std::mt19937_64 rng_f = make_rng(spec.seed, 4);
  std::mt19937_64 rng_treat = make_rng(spec.seed, 5);
  std::mt19937_64 rng_noise = make_rng(spec.seed, 6);

  SimOutput out;
  out.data.x = detail::uniform_points(rng_x, spec.n, spec.d);
  out.x_query = detail::uniform_points(rng_q, spec.m, spec.d);

  // theta realized jointly on train + query so the retained truth is
  // one consistent function draw
  Eigen::MatrixXd joint_pts(spec.n + spec.m, spec.d);
  joint_pts.topRows(spec.n) = out.data.x;
  joint_pts.bottomRows(spec.m) = out.x_query;
  const Eigen::VectorXd theta_vals =
      detail::draw_function(spec.theta_source, spec.theta_kernel, joint_pts, rng_theta);
  const Eigen::VectorXd theta_train = theta_vals.head(spec.n);
  out.true_cate = theta_vals.tail(spec.m);
  out.true_f_at_train = detail::draw_function(spec.f_source, spec.f_kernel, out.data.x, rng_f);

  // clipped logistic propensity, linear or GP-drawn score
  Eigen::VectorXd score(spec.n);
  if (spec.propensity == PropensityModel::LogisticLinear) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::VectorXd wp(spec.d);
    for (int j = 0; j < spec.d; ++j) wp(j) = gauss(rng_treat);
    score = out.data.x * wp;
  } else {
    score = detail::draw_function(FunctionSource::GpDraw, KernelSpec::rbf(1.0), out.data.x,
                                  rng_treat);
  }
  out.propensities.resize(spec.n);
  out.data.t.resize(spec.n);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (int i = 0; i < spec.n; ++i) {
    const double p =
        std::clamp(detail::sigmoid(score(i)), spec.clip, 1.0 - spec.clip);
    out.propensities(i) = p;
    out.data.t(i) = u01(rng_treat) < p ? 1.0 : 0.0;
  }

  std::normal_distribution<double> noise(0.0, 1.0 / std::sqrt(spec.noise_precision));
  out.data.y.resize(spec.n);
  for (int i = 0; i < spec.n; ++i)
    out.data.y(i) = theta_train(i) * out.data.t(i) + out.true_f_at_train(i) + noise(rng_noise);
  return out;
}

}  // namespace plgp
