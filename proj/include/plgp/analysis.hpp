#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "plgp/common.hpp"
#include "plgp/errors.hpp"
#include "plgp/hyperopt.hpp"
#include "plgp/synthetic.hpp"

namespace plgp {

/// Two model densities (theta0,f0) vs (theta1,f1) tabulated on a shared
/// covariate grid with weights; exact when the covariate distribution is
/// discrete on that grid.
struct DensityPair {
  Eigen::VectorXd theta0, f0, theta1, f1;
  Eigen::VectorXd propensity;  // p(T=1 | x) per grid point
  Eigen::VectorXd weights;     // p(x), sums to 1
  double noise_precision{1.0};

  Eigen::Index grid_size() const { return weights.size(); }

  void validate() const {
    const Eigen::Index g = grid_size();
    if (g < 1) throw shape_error("DensityPair: empty grid");
    if (theta0.size() != g || f0.size() != g || theta1.size() != g || f1.size() != g ||
        propensity.size() != g)
      throw shape_error("DensityPair: all grid vectors must share length");
    if (!(noise_precision > 0.0)) throw config_error("DensityPair: noise_precision must be positive");
    if ((weights.array() < 0.0).any()) throw config_error("DensityPair: negative weight");
    if (std::abs(weights.sum() - 1.0) > 1e-12)
      throw config_error("DensityPair: weights must sum to 1");
    if ((propensity.array() < 0.0).any() || (propensity.array() > 1.0).any())
      throw config_error("DensityPair: propensity outside [0,1]");
  }
};

/// KL(p0 || p1) over the grid, using the equal-variance Gaussian closed form
/// (s/2) * (mu0 - mu1)^2 per (x, t) cell.
inline double kl_divergence(const DensityPair& pair) {
  pair.validate();
  const double half_s = 0.5 * pair.noise_precision;
  double kl = 0.0;
  for (Eigen::Index i = 0; i < pair.grid_size(); ++i) {
    const double d_theta = pair.theta0(i) - pair.theta1(i);
    const double d_f = pair.f0(i) - pair.f1(i);
    const double p1 = pair.propensity(i);
    kl += pair.weights(i) *
          (p1 * half_s * (d_theta + d_f) * (d_theta + d_f) + (1.0 - p1) * half_s * d_f * d_f);
  }
  return kl;
}

/// Sup-norm bound (s/2)(max|dtheta|^2 + 2 max|df|^2).
inline double kl_upper_bound(const DensityPair& pair) {
  pair.validate();
  const double max_dt = (pair.theta0 - pair.theta1).cwiseAbs().maxCoeff();
  const double max_df = (pair.f0 - pair.f1).cwiseAbs().maxCoeff();
  return 0.5 * pair.noise_precision * (max_dt * max_dt + 2.0 * max_df * max_df);
}

/// Pinsker bound on the L1 distance between the two joint densities.
inline double l1_distance_bound(const DensityPair& pair) {
  return std::sqrt(2.0 * kl_divergence(pair));
}

struct McEstimate {
  double value{0.0};
  double std_error{0.0};
};

/// Monte Carlo estimate of the true L1 distance: draws (x, t, y) from the
/// p0 density and averages |1 - p1/p0| evaluated at the draw.
inline McEstimate mc_l1_distance(const DensityPair& pair, int samples, std::mt19937_64& rng) {
  pair.validate();
  if (samples < 2) throw config_error("mc_l1_distance: need at least 2 samples");
  const double s = pair.noise_precision;
  const double sd = 1.0 / std::sqrt(s);
  std::discrete_distribution<int> pick_x(pair.weights.data(),
                                         pair.weights.data() + pair.weights.size());
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, sd);

  double sum = 0.0, sum_sq = 0.0;
  for (int k = 0; k < samples; ++k) {
    const int i = pick_x(rng);
    const double t = u01(rng) < pair.propensity(i) ? 1.0 : 0.0;
    const double mu0 = pair.theta0(i) * t + pair.f0(i);
    const double mu1 = pair.theta1(i) * t + pair.f1(i);
    const double y = mu0 + gauss(rng);
    // density ratio of equal-variance Gaussians
    const double log_ratio = -0.5 * s * ((y - mu1) * (y - mu1) - (y - mu0) * (y - mu0));
    const double v = std::abs(1.0 - std::exp(log_ratio));
    sum += v;
    sum_sq += v * v;
  }
  McEstimate est;
  const double nn = static_cast<double>(samples);
  est.value = sum / nn;
  const double var = std::max(0.0, sum_sq / nn - est.value * est.value);
  est.std_error = std::sqrt(var / nn);
  return est;
}

struct ContractionRecord {
  int n{0};
  std::uint64_t seed{0};
  double mse{0.0};
};

/// Empirical posterior-contraction sweep: simulate, fit hyperparameters,
/// score the posterior CATE mean at the sim's query points.
inline std::vector<ContractionRecord> contraction_curve(const SimSpec& base,
                                                        const std::vector<int>& sample_sizes,
                                                        const std::vector<std::uint64_t>& seeds,
                                                        const FitOptions& fit_opts = {}) {
  std::vector<ContractionRecord> records;
  records.reserve(sample_sizes.size() * seeds.size());
  for (int n : sample_sizes) {
    for (std::uint64_t seed : seeds) {
      SimSpec spec = base;
      spec.n = n;
      spec.seed = seed;
      const SimOutput sim = simulate(spec);

      FitOptions opts = fit_opts;
      opts.seed = mix_seed(seed, static_cast<std::uint64_t>(n));
      const HyperFitResult fit = fit_hyperparameters(sim.data, opts);
      const PosteriorPredictive post = posterior_cate(fit.config, sim.data, sim.x_query);
      records.push_back(
          {n, seed, (post.mean - sim.true_cate).squaredNorm() / static_cast<double>(spec.m)});
    }
  }
  return records;
}

}  // namespace plgp
