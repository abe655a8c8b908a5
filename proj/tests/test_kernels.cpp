#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "plgp/kernels.hpp"

using namespace plgp;

namespace {

Eigen::MatrixXd random_points(std::mt19937_64& rng, int n, int d) {
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  Eigen::MatrixXd p(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) p(i, j) = u(rng);
  return p;
}

}  // namespace

TEST_CASE("RBF eval matches analytic values") {
  const KernelSpec rbf = KernelSpec::rbf(1.0);
  Eigen::VectorXd a(2), b(2);
  a << 0.3, -0.7;
  CHECK(kernel_eval(rbf, a, a) == 1.0);

  b << 1.0, 0.0;
  a << 0.0, 0.0;
  CHECK_THAT(kernel_eval(rbf, a, b), Catch::Matchers::WithinAbs(std::exp(-1.0), 1e-15));
}

TEST_CASE("ScaledBase rescales the base kernel") {
  Eigen::VectorXd x(2);
  x << 0.4, 0.1;
  const KernelSpec scaled = KernelSpec::scaled_rbf(2.0, 1.0);
  CHECK_THAT(kernel_eval(scaled, x, x), Catch::Matchers::WithinAbs(0.5, 1e-15));

  // tau = lambda = 1 reproduces the base kernel exactly
  std::mt19937_64 rng(11);
  const KernelSpec base = KernelSpec::rbf(0.7);
  const KernelSpec wrapped = KernelSpec::scaled_rbf(1.0, 1.0, 0.7);
  const Eigen::MatrixXd pts = random_points(rng, 6, 3);
  for (int i = 0; i < pts.rows(); ++i)
    for (int j = 0; j < pts.rows(); ++j)
      CHECK(kernel_eval(wrapped, pts.row(i), pts.row(j)) ==
            kernel_eval(base, pts.row(i), pts.row(j)));
}

TEST_CASE("eval validates inputs") {
  Eigen::VectorXd a(2), b(3);
  a.setZero();
  b.setZero();
  CHECK_THROWS_AS(kernel_eval(KernelSpec::rbf(1.0), a, b), shape_error);
  CHECK_THROWS_AS(kernel_eval(KernelSpec::rbf(-1.0), a, a), config_error);
  CHECK_THROWS_AS(kernel_eval(KernelSpec::rbf(0.0), a, a), config_error);
  CHECK_THROWS_AS(kernel_eval(KernelSpec::scaled_rbf(-2.0, 1.0), a, a), config_error);
  CHECK_THROWS_AS(gram(KernelSpec::rbf(1.0), Eigen::MatrixXd::Zero(2, 2),
                       Eigen::MatrixXd::Zero(2, 3)),
                  shape_error);
}

TEST_CASE("gram matches analytic entries") {
  Eigen::MatrixXd A(2, 2);
  A << 0.0, 0.0, 1.0, 0.0;
  const Eigen::MatrixXd K = gram(KernelSpec::rbf(1.0), A, A);
  CHECK(K(0, 0) == 1.0);
  CHECK(K(1, 1) == 1.0);
  CHECK_THAT(K(0, 1), Catch::Matchers::WithinAbs(std::exp(-1.0), 1e-15));
  CHECK(K(0, 1) == K(1, 0));

  const Eigen::MatrixXd single =
      gram(KernelSpec::rbf(1.0), Eigen::MatrixXd::Zero(1, 2), Eigen::MatrixXd::Zero(1, 2));
  CHECK(single(0, 0) == 1.0);
}

TEST_CASE("gram entries agree with eval and symmetry is exact") {
  std::mt19937_64 rng(42);
  for (int rep = 0; rep < 20; ++rep) {
    const KernelSpec spec =
        rep % 2 ? KernelSpec::rbf(0.5 + rep * 0.1) : KernelSpec::scaled_rbf(1.5, 0.8, 1.2);
    const Eigen::MatrixXd A = random_points(rng, 5, 2);
    const Eigen::MatrixXd B = random_points(rng, 4, 2);
    const Eigen::MatrixXd K = gram(spec, A, B);
    for (int i = 0; i < 5; ++i)
      for (int j = 0; j < 4; ++j) {
        CHECK_THAT(K(i, j),
                   Catch::Matchers::WithinAbs(kernel_eval(spec, A.row(i), B.row(j)), 1e-14));
        CHECK(kernel_eval(spec, A.row(i), B.row(j)) == kernel_eval(spec, B.row(j), A.row(i)));
        CHECK(std::abs(K(i, j)) <= kernel_eval(spec, A.row(i), A.row(i)));
      }
  }
}

TEST_CASE("gram of a point set with itself is PSD") {
  std::mt19937_64 rng(7);
  for (int rep = 0; rep < 10; ++rep) {
    const Eigen::MatrixXd A = random_points(rng, 5, 3);
    const Eigen::MatrixXd K = gram(KernelSpec::rbf(1.0), A, A);
    // independent eigendecomposition oracle
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(K);
    CHECK(eig.eigenvalues().minCoeff() >= -1e-10);
  }
}
