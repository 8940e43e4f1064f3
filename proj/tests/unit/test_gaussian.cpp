#include <doctest.h>

#include <cmath>

#include "../common/helpers.hpp"
#include "../common/oracles.hpp"
#include "../common/properties.hpp"
#include "vf/errors.hpp"
#include "vf/gaussian.hpp"

using namespace vf;
using namespace vf::testing;

TEST_CASE("univariate normal basics") {
  CHECK(normal_cdf(1.7, 1.7, 2.3) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(normal_pdf(0.0, 0.0, 1.0) == doctest::Approx(0.3989422804014327).epsilon(1e-12));
  // reference value from an independent erf evaluation
  const double ref = 0.5 * (1.0 + std::erf(1.96 / std::sqrt(2.0)));
  CHECK(normal_cdf(1.96, 0.0, 1.0) == doctest::Approx(ref).epsilon(1e-12));
  CHECK(std::abs(normal_cdf(1.96, 0.0, 1.0) - 0.9750021) < 1e-7);
  CHECK_THROWS(normal_pdf(0.0, 0.0, 0.0));
  CHECK_THROWS(normal_cdf(0.0, 0.0, -1.0));
}

TEST_CASE("normal_cdf_inv inverts the cdf") {
  for (double p : {1e-12, 1e-6, 0.01, 0.3, 0.5, 0.7, 0.99, 1.0 - 1e-6}) {
    const double x = normal_cdf_inv(p);
    CHECK(normal_cdf(x, 0.0, 1.0) == doctest::Approx(p).epsilon(1e-9));
  }
}

TEST_CASE("adjusted pdf and cdf") {
  SUBCASE("continuity at the mean") {
    CHECK(adjusted_pdf(1.0, 1.0, 2.0) == doctest::Approx(normal_pdf(1.0, 1.0, 2.0)));
    CHECK(adjusted_cdf(1.0, 1.0, 2.0) == doctest::Approx(0.5));
  }
  SUBCASE("left tail approaches twice the peak") {
    const double peak = normal_pdf(0.0, 0.0, 1.0);
    CHECK(adjusted_pdf(-40.0, 0.0, 1.0) == doctest::Approx(2.0 * peak).epsilon(1e-12));
    CHECK(adjusted_pdf(-40.0, 0.0, 1.0) > 0.0);
  }
  SUBCASE("one standard deviation below the mean") {
    // 2 f(0) - f(1) for the standard normal
    const double expected = 2.0 * 0.3989422804014327 - 0.24197072451914337;
    CHECK(adjusted_pdf(-1.0, 0.0, 1.0) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(std::abs(adjusted_pdf(-1.0, 0.0, 1.0) - 0.5559139) < 1e-6);
  }
}

TEST_CASE("mvn_cdf univariate reduction and product law") {
  Rng rng(42);
  SUBCASE("dimension one matches normal_cdf") {
    for (int c = 0; c < 20; ++c) {
      const double mu = rng.uniform(-2, 2), sd = rng.uniform(0.3, 2.5), z = rng.uniform(-4, 4);
      GaussianVector g(VectorXd::Constant(1, mu), MatrixXd::Constant(1, 1, sd * sd));
      CHECK(std::abs(mvn_cdf(VectorXd::Constant(1, z), g).value - normal_cdf(z, mu, sd)) <
            1e-10);
    }
  }
  SUBCASE("independent components factorize") {
    for (int c = 0; c < 10; ++c) {
      const int s = rng.uniform_int(2, 4);
      VectorXd mu = random_vector(rng, s, -1, 1);
      VectorXd var = random_vector(rng, s, 0.2, 2.0);
      GaussianVector g(mu, MatrixXd(var.asDiagonal()));
      VectorXd z = random_vector(rng, s, -2, 2);
      double expected = 1.0;
      for (int j = 0; j < s; ++j) expected *= normal_cdf(z(j), mu(j), std::sqrt(var(j)));
      MvnCdfOptions opts;
      opts.accuracy = 1e-5;
      const auto res = mvn_cdf(z, g, opts, 5);
      CHECK(std::abs(res.value - expected) < 2e-4);
    }
  }
}

TEST_CASE("mvn_cdf agrees with plain Monte Carlo on correlated gaussians") {
  Rng rng(777);
  for (int c = 0; c < 5; ++c) {
    const int s = 5;
    const VectorXd mu = random_vector(rng, s, -1, 1);
    const MatrixXd cov = random_psd(rng, s);
    const GaussianVector g(mu, cov);
    const VectorXd z = random_vector(rng, s, -1.5, 1.5);
    MvnCdfOptions opts;
    opts.accuracy = 1e-4;
    const auto qmc = mvn_cdf(z, g, opts, 12345 + c);
    const auto mc = mc_mvncdf(z, mu, cov, 1000000, 999 + c);
    const double comb = std::sqrt(mc.se * mc.se + (qmc.error / 3.0) * (qmc.error / 3.0));
    CHECK(std::abs(qmc.value - mc.value) <= 3.0 * comb + 1e-6);
  }
}

TEST_CASE("conditional_complement closed forms") {
  SUBCASE("diagonal covariance keeps the marginal") {
    VectorXd mu(3);
    mu << 1.0, -2.0, 3.0;
    VectorXd var(3);
    var << 0.5, 1.5, 2.5;
    GaussianVector g(mu, MatrixXd(var.asDiagonal()));
    const auto cond = conditional_complement(g, 1, 7.0);
    CHECK(cond.mean()(0) == doctest::Approx(1.0));
    CHECK(cond.mean()(1) == doctest::Approx(3.0));
    CHECK(cond.cov()(0, 0) == doctest::Approx(0.5));
    CHECK(cond.cov()(1, 1) == doctest::Approx(2.5));
    CHECK(std::abs(cond.cov()(0, 1)) < 1e-12);
  }
  SUBCASE("bivariate textbook identity") {
    const double rho = 0.6;
    VectorXd mu(2);
    mu << 0.3, -0.7;
    MatrixXd cov(2, 2);
    cov << 1.0, rho, rho, 1.0;
    GaussianVector g(mu, cov);
    const auto cond = conditional_complement(g, 0, mu(0));  // condition at the mean
    CHECK(cond.mean()(0) == doctest::Approx(mu(1)).epsilon(1e-12));
    CHECK(cond.cov()(0, 0) == doctest::Approx(1.0 - rho * rho).epsilon(1e-12));
  }
  SUBCASE("sigma_jj <= 0 rejected") {
    GaussianVector g(VectorXd::Zero(2), MatrixXd::Identity(2, 2));
    CHECK_THROWS(conditional_complement(g, 5, 0.0));
  }
}

TEST_CASE("mvncdf_gradient closed forms") {
  SUBCASE("dimension one is the density") {
    GaussianVector g(VectorXd::Constant(1, 0.5), MatrixXd::Constant(1, 1, 4.0));
    const VectorXd grad = mvncdf_gradient(VectorXd::Constant(1, 1.5), g);
    CHECK(grad(0) == doctest::Approx(normal_pdf(1.5, 0.5, 2.0)).epsilon(1e-12));
  }
  SUBCASE("independent bivariate splits into density times cdf") {
    VectorXd mu(2);
    mu << 0.0, 1.0;
    VectorXd var(2);
    var << 1.0, 4.0;
    GaussianVector g(mu, MatrixXd(var.asDiagonal()));
    VectorXd z(2);
    z << 0.7, 0.2;
    MvnCdfOptions opts;
    opts.accuracy = 1e-6;
    const VectorXd grad = mvncdf_gradient(z, g, opts, 3);
    CHECK(grad(0) ==
          doctest::Approx(normal_pdf(0.7, 0.0, 1.0) * normal_cdf(0.2, 1.0, 2.0)).epsilon(1e-4));
    CHECK(grad(1) ==
          doctest::Approx(normal_pdf(0.2, 1.0, 2.0) * normal_cdf(0.7, 0.0, 1.0)).epsilon(1e-4));
  }
}

TEST_CASE("adjusted gradient semantics") {
  SUBCASE("identity above the means with nonpositive correlations") {
    VectorXd mu(2);
    mu << -1.0, 0.5;
    MatrixXd cov(2, 2);
    cov << 1.0, -0.4, -0.4, 0.8;
    GaussianVector g(mu, cov);
    VectorXd z(2);
    z << 0.5, 2.0;  // both above their means
    MvnCdfOptions opts;
    opts.accuracy = 1e-6;
    const VectorXd a = adjusted_mvncdf_gradient(z, g, opts, 9);
    const VectorXd b = mvncdf_gradient(z, g, opts, 9);
    CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("independent bivariate below the means uses scalar adjusted factors") {
    VectorXd mu(2);
    mu << 0.0, 1.0;
    VectorXd var(2);
    var << 1.0, 4.0;
    GaussianVector g(mu, MatrixXd(var.asDiagonal()));
    VectorXd z(2);
    z << -2.0, -1.0;  // both below their means
    MvnCdfOptions opts;
    opts.accuracy = 1e-6;
    const VectorXd grad = adjusted_mvncdf_gradient(z, g, opts, 17);
    CHECK(grad(0) == doctest::Approx(adjusted_pdf(-2.0, 0.0, 1.0) *
                                     adjusted_cdf(-1.0, 1.0, 2.0)).epsilon(1e-4));
    CHECK(grad(1) == doctest::Approx(adjusted_pdf(-1.0, 1.0, 2.0) *
                                     adjusted_cdf(-2.0, 0.0, 1.0)).epsilon(1e-4));
  }
  SUBCASE("deeply violated point keeps a live direction") {
    Rng rng(4242);
    const MatrixXd cov = random_psd(rng, 3, 0.5, 1.5);
    const VectorXd mu = random_vector(rng, 3, -1.0, 1.0);
    GaussianVector g(mu, cov);
    VectorXd z(3);
    for (int j = 0; j < 3; ++j) z(j) = mu(j) - 8.0 * g.sd(j);
    MvnCdfOptions opts;
    opts.accuracy = 1e-6;
    const VectorXd dead = mvncdf_gradient(z, g, opts, 21);
    const VectorXd live = adjusted_mvncdf_gradient(z, g, opts, 21);
    for (int j = 0; j < 3; ++j) {
      CHECK(dead(j) < 1e-10);
      CHECK(live(j) > 0.1 * normal_pdf(mu(j), mu(j), g.sd(j)));
    }
  }
}

TEST_CASE("degenerate covariance degrades to an indicator") {
  GaussianVector g(VectorXd::Constant(1, 2.0), MatrixXd::Zero(1, 1));
  CHECK(mvn_cdf(VectorXd::Constant(1, 3.0), g).value == doctest::Approx(1.0));
  CHECK(mvn_cdf(VectorXd::Constant(1, 1.0), g).value == doctest::Approx(0.0));
}

TEST_CASE("gaussian invariants hold on random instances") {
  for (const auto& r : gaussian_properties(200, 1001)) {
    INFO(r.name, " failures=", r.failures, "/", r.cases);
    CHECK(r.ok());
  }
}

TEST_CASE("gradient matches finite differences over random covariances") {
  for (const auto& r : gaussian_fd_property(200, 2002)) {
    INFO(r.name, " failures=", r.failures, "/", r.cases);
    CHECK(r.ok());
  }
}
