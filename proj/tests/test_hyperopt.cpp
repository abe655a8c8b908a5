#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "plgp/hyperopt.hpp"
#include "plgp/synthetic.hpp"

using namespace plgp;

namespace {

Dataset random_dataset(std::mt19937_64& rng, int n, int d) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::bernoulli_distribution coin(0.5);
  Dataset data;
  data.x.resize(n, d);
  data.t.resize(n);
  data.y.resize(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) data.x(i, j) = u(rng);
    data.t(i) = coin(rng) ? 1.0 : 0.0;
    data.y(i) = gauss(rng);
  }
  return data;
}

Eigen::VectorXd fd_gradient(const ModelConfig& cfg, const Dataset& data) {
  const Eigen::VectorXd x0 = detail::ParamVector::pack(cfg);
  Eigen::VectorXd g(x0.size());
  const double h = 1e-5;
  for (int j = 0; j < x0.size(); ++j) {
    Eigen::VectorXd hi = x0, lo = x0;
    hi(j) += h;
    lo(j) -= h;
    g(j) = (log_marginal_likelihood(detail::ParamVector::unpack(cfg, hi), data) -
            log_marginal_likelihood(detail::ParamVector::unpack(cfg, lo), data)) /
           (2.0 * h);
  }
  return g;
}

}  // namespace

TEST_CASE("log marginal likelihood matches scalar density oracles") {
  // treated unit instance: y ~ N(0, 3)
  ModelConfig cfg;
  Dataset data;
  data.x = Eigen::MatrixXd::Zero(1, 1);
  data.t = Eigen::VectorXd::Ones(1);
  data.y = Eigen::VectorXd::Zero(1);
  CHECK_THAT(log_marginal_likelihood(cfg, data),
             Catch::Matchers::WithinAbs(-0.5 * std::log(2.0 * M_PI * 3.0), 1e-12));

  // control unit instance: y ~ N(0, 2)
  data.t.setZero();
  CHECK_THAT(log_marginal_likelihood(cfg, data),
             Catch::Matchers::WithinAbs(-0.5 * std::log(4.0 * M_PI), 1e-12));
  CHECK_THAT(log_marginal_likelihood(cfg, data),
             Catch::Matchers::WithinAbs(-1.2655121234846454, 1e-7));
}

TEST_CASE("log marginal likelihood is exchangeable in the sample rows") {
  std::mt19937_64 rng(9);
  const Dataset data = random_dataset(rng, 6, 2);
  ModelConfig cfg;
  cfg.kernel_theta = KernelSpec::rbf(0.8);
  cfg.kernel_f = KernelSpec::rbf(1.3);
  cfg.noise_precision = 2.0;

  std::vector<int> perm{3, 1, 5, 0, 4, 2};
  Dataset shuffled;
  shuffled.x.resize(6, 2);
  shuffled.t.resize(6);
  shuffled.y.resize(6);
  for (int i = 0; i < 6; ++i) {
    shuffled.x.row(i) = data.x.row(perm[i]);
    shuffled.t(i) = data.t(perm[i]);
    shuffled.y(i) = data.y(perm[i]);
  }
  CHECK_THAT(log_marginal_likelihood(cfg, shuffled),
             Catch::Matchers::WithinAbs(log_marginal_likelihood(cfg, data), 1e-10));
}

TEST_CASE("analytic gradient matches central finite differences") {
  std::mt19937_64 rng(123);
  std::uniform_real_distribution<double> u(0.3, 3.0);
  std::uniform_int_distribution<int> pick_n(4, 15);
  for (int rep = 0; rep < 20; ++rep) {
    ModelConfig cfg;
    cfg.kernel_theta = KernelSpec::rbf(u(rng));
    cfg.kernel_f = KernelSpec::rbf(u(rng));
    cfg.noise_precision = u(rng);
    const Dataset data = random_dataset(rng, pick_n(rng), 2);

    const Eigen::VectorXd analytic = lml_gradient(cfg, data);
    const Eigen::VectorXd fd = fd_gradient(cfg, data);
    for (int j = 0; j < analytic.size(); ++j) {
      const double rel = std::abs(analytic(j) - fd(j)) / std::max(1e-8, std::abs(fd(j)));
      CHECK(rel <= 1e-5);
    }
  }
}

TEST_CASE("gradient also checks out for the scaled kernel family") {
  std::mt19937_64 rng(321);
  ModelConfig cfg;
  cfg.kernel_theta = KernelSpec::scaled_rbf(1.7, 0.6);
  cfg.kernel_f = KernelSpec::scaled_rbf(0.9, 1.4);
  cfg.noise_precision = 1.2;
  const Dataset data = random_dataset(rng, 10, 2);
  const Eigen::VectorXd analytic = lml_gradient(cfg, data);
  const Eigen::VectorXd fd = fd_gradient(cfg, data);
  REQUIRE(analytic.size() == 5);
  for (int j = 0; j < 5; ++j)
    CHECK(std::abs(analytic(j) - fd(j)) / std::max(1e-8, std::abs(fd(j))) <= 1e-5);
}

TEST_CASE("all-control data makes the theta-kernel gradient vanish") {
  std::mt19937_64 rng(11);
  Dataset data = random_dataset(rng, 8, 2);
  data.t.setZero();
  ModelConfig cfg;
  const Eigen::VectorXd g = lml_gradient(cfg, data);
  CHECK(g(0) == 0.0);
}

TEST_CASE("fit result is deterministic and never beaten by its warm start") {
  SimSpec spec;
  spec.n = 60;
  spec.m = 5;
  spec.seed = 31;
  const SimOutput sim = simulate(spec);

  FitOptions opts;
  opts.restarts = 3;
  opts.max_iters = 60;
  opts.seed = 7;
  const HyperFitResult a = fit_hyperparameters(sim.data, opts);
  const HyperFitResult b = fit_hyperparameters(sim.data, opts);
  CHECK(a.log_marginal_likelihood == b.log_marginal_likelihood);
  CHECK(a.config.kernel_theta.beta == b.config.kernel_theta.beta);
  CHECK(a.config.kernel_f.beta == b.config.kernel_f.beta);
  CHECK(a.config.noise_precision == b.config.noise_precision);
  CHECK(a.restarts_run == 3);

  // warm start is restart #0 and ascent is monotone
  CHECK(a.log_marginal_likelihood >=
        log_marginal_likelihood(opts.warm_start, sim.data) - 1e-6);

  // terminal point satisfies the first-order condition approximately when converged
  if (!a.converged.empty() && a.converged.front()) {
    const Eigen::VectorXd g = lml_gradient(a.config, sim.data);
    CHECK(g.cwiseAbs().maxCoeff() <= 1e-4);
  }
}

TEST_CASE("fitted noise precision is in the right ballpark") {
  // median over seeds of the fitted s_eps should be within a factor of 2
  std::vector<double> fitted;
  for (std::uint64_t seed = 1; seed <= 9; ++seed) {
    SimSpec spec;
    spec.n = 200;
    spec.m = 5;
    spec.seed = seed;
    const SimOutput sim = simulate(spec);
    FitOptions opts;
    opts.restarts = 2;
    opts.max_iters = 60;
    opts.seed = seed;
    fitted.push_back(fit_hyperparameters(sim.data, opts).config.noise_precision);
  }
  std::sort(fitted.begin(), fitted.end());
  const double median = fitted[fitted.size() / 2];
  CHECK(median > 0.5);
  CHECK(median < 2.0);
}

TEST_CASE("fit rejects degenerate inputs") {
  Dataset tiny;
  tiny.x = Eigen::MatrixXd::Zero(1, 1);
  tiny.t = Eigen::VectorXd::Ones(1);
  tiny.y = Eigen::VectorXd::Zero(1);
  CHECK_THROWS_AS(fit_hyperparameters(tiny), config_error);
}
