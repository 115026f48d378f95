#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "mvlmn/harness.hpp"
#include "mvlmn/stats.hpp"
#include "mvlmn/stochastic_reps.hpp"

using namespace mvlmn;

namespace {

ModelSpec identity_model(int p, const Eigen::VectorXd& mu) {
  return ModelSpec(mu, Eigen::MatrixXd::Identity(p, p), Eigen::MatrixXd::Zero(p, 1),
                   NuDistribution::standard_truncated_normal(1));
}

ModelSpec dense_model(int p, int q, std::uint64_t seed, bool gal) {
  RngStream r(seed, 77);
  Eigen::MatrixXd a(p, p);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j) a(i, j) = r.normal();
  Eigen::MatrixXd sigma = a * a.transpose() / p + 0.3 * Eigen::MatrixXd::Identity(p, p);
  Eigen::VectorXd mu(p);
  Eigen::MatrixXd b(p, q);
  for (int i = 0; i < p; ++i) {
    mu(i) = 2 * r.uniform() - 1;
    for (int j = 0; j < q; ++j) b(i, j) = r.uniform();
  }
  return ModelSpec(mu, sigma, b, gal ? NuDistribution::standard_gal(q) : NuDistribution::standard_truncated_normal(q));
}

double oracle_ks(ProductKind kind, const ModelSpec& m, std::size_t n, int reps, std::uint64_t seed) {
  const Eigen::VectorXd l = Eigen::VectorXd::LinSpaced(static_cast<Eigen::Index>(m.p()), 1.0, 2.0);
  const Quadratics quad(m, l);
  std::vector<double> rep, ora;
  for (int i = 0; i < reps; ++i) {
    RngStream a(seed, static_cast<std::uint64_t>(i));
    RngStream b(seed + 1, static_cast<std::uint64_t>(i));
    rep.push_back(sample_product(kind, m, quad, n, a).value);
    ora.push_back(oracle_product(kind, m, l, n, b).value);
  }
  return two_sample_ks(rep, ora);
}

}  // namespace

TEST(Quadratics, DeltaSquaredExamples) {
  Eigen::VectorXd mu(3);
  mu << 1, 2, 3;
  const auto m = identity_model(3, mu);
  const Quadratics q(m, Eigen::Vector3d(1, 0, 0));
  EXPECT_NEAR(q.forms(Eigen::VectorXd::Zero(1)).delta2, 13.0, 1e-12);

  const Eigen::Vector3d l(1.0, -2.0, 0.5);
  const auto par = identity_model(3, 3.0 * l);
  EXPECT_NEAR(Quadratics(par, l).forms(Eigen::VectorXd::Zero(1)).delta2, 0.0, 1e-12);
}

TEST(Quadratics, DeltaSquaredMatchesDenseProjection) {
  const auto m = dense_model(5, 2, 3, false);
  const Eigen::VectorXd l = Eigen::VectorXd::LinSpaced(5, -1.0, 2.0);
  const Eigen::VectorXd nu = Eigen::Vector2d(0.7, 1.3);
  const Eigen::MatrixXd si = m.sigma().inverse();
  const Eigen::MatrixXd rl = si - si * l * l.transpose() * si / l.dot(si * l);
  const Eigen::VectorXd mn = mu_nu(m, nu);
  const NuForms f = Quadratics(m, l).forms(nu);
  EXPECT_NEAR(f.delta2, mn.dot(rl * mn), 1e-10);
  EXPECT_NEAR(f.l_sigma_mu, l.dot(m.sigma() * mn), 1e-10);
  EXPECT_NEAR(f.mu_sigma_mu, mn.dot(m.sigma() * mn), 1e-10);
  EXPECT_NEAR(f.l_sinv_mu, l.dot(si * mn), 1e-10);
  EXPECT_NEAR(f.mu_sinv_mu, mn.dot(si * mn), 1e-9);
  const Quadratics q(m, l);
  EXPECT_NEAR(q.l_sigma3_l(), l.dot(m.sigma() * m.sigma() * m.sigma() * l), 1e-9);
  EXPECT_NEAR(q.trace_sigma2(), (m.sigma() * m.sigma()).trace(), 1e-10);
}

TEST(CovProduct, ZeroLGivesZero) {
  const auto m = dense_model(4, 2, 5, false);
  for (int i = 0; i < 20; ++i) {
    RngStream r(1, static_cast<std::uint64_t>(i));
    EXPECT_EQ(sample_cov_product(m, Eigen::VectorXd::Zero(4), 10, r).value, 0.0);
  }
}

TEST(CovProduct, OneDimensionalExact) {
  Eigen::MatrixXd sigma(1, 1);
  sigma << 2.5;
  const ModelSpec m(Eigen::VectorXd::Constant(1, 0.4), sigma, Eigen::MatrixXd::Constant(1, 1, 1.0),
                    NuDistribution::standard_truncated_normal(1));
  const Eigen::VectorXd l = Eigen::VectorXd::Constant(1, 1.5);
  const std::size_t n = 9;
  RngStream a(4, 4), b(4, 4);
  const auto d = sample_cov_product(m, l, n, a);
  // Replay the same stream: nu, one normal for xbar, xi, z0.
  const Eigen::VectorXd nu = sample_nu(m.nu(), b);
  const double xbar = 0.4 + nu(0) + std::sqrt(2.5) / 3.0 * b.normal();
  const double xi = sample_chi_squared(n - 1, b);
  EXPECT_NEAR(d.value, xi / 8.0 * 2.5 * 1.5 * xbar, 1e-12 * std::abs(d.value));
}

TEST(CovProduct, MatchesMatrixOracle) {
  for (bool gal : {false, true}) {
    const auto m = dense_model(5, 2, 7, gal);
    EXPECT_LE(oracle_ks(ProductKind::CovTimesMean, m, 20, 5000, 100), 0.04) << "gal=" << gal;
  }
}

TEST(CovProduct, SingularRegimeMatchesOracle) {
  const auto m = dense_model(15, 2, 9, false);
  EXPECT_LE(oracle_ks(ProductKind::CovTimesMean, m, 10, 5000, 200), 0.04);
}

TEST(PrecisionProduct, MatchesMatrixOracle) {
  for (bool gal : {false, true}) {
    const auto m = dense_model(5, 2, 11, gal);
    EXPECT_LE(oracle_ks(ProductKind::PrecisionTimesMean, m, 30, 5000, 300), 0.04) << "gal=" << gal;
  }
}

TEST(PrecisionProduct, OneDimensionalBranch) {
  Eigen::MatrixXd sigma(1, 1);
  sigma << 0.5;
  const ModelSpec m(Eigen::VectorXd::Constant(1, 1.0), sigma, Eigen::MatrixXd::Constant(1, 1, 2.0),
                    NuDistribution::standard_truncated_normal(1));
  const Eigen::VectorXd l = Eigen::VectorXd::Constant(1, 1.0);
  const std::size_t n = 16;
  RngStream a(6, 1), b(6, 1);
  const auto d = sample_precision_product(m, l, n, a);
  const Eigen::VectorXd nu = sample_nu(m.nu(), b);
  const double xi = sample_chi_squared(n - 1, b);
  const double z0 = b.normal();
  const double expect = 15.0 / xi * ((1.0 + 2.0 * nu(0)) / 0.5 + std::sqrt(2.0) * z0 / 4.0);
  EXPECT_NEAR(d.value, expect, 1e-12 * std::abs(expect));
  EXPECT_LE(oracle_ks(ProductKind::PrecisionTimesMean, m, n, 5000, 400), 0.04);
}

TEST(PrecisionProduct, RegimeAndZeroVector) {
  const auto m = dense_model(5, 1, 13, false);
  RngStream r(1, 1);
  EXPECT_THROW(sample_precision_product(m, Eigen::VectorXd::Ones(5), 6, r), RegimeError);
  EXPECT_THROW(sample_precision_product(m, Eigen::VectorXd::Zero(5), 20, r), ZeroVector);
  EXPECT_THROW(oracle_product(ProductKind::PrecisionTimesMean, m, Eigen::VectorXd::Ones(5), 6, r), RegimeError);
}

TEST(Products, LinearInL) {
  const auto m = dense_model(6, 2, 15, true);
  const Eigen::VectorXd l = Eigen::VectorXd::LinSpaced(6, 0.5, -1.0);
  const Quadratics q1(m, l), q2(m, 2.0 * l);
  for (auto kind : {ProductKind::CovTimesMean, ProductKind::PrecisionTimesMean}) {
    for (int i = 0; i < 100; ++i) {
      RngStream a(8, static_cast<std::uint64_t>(i)), b(8, static_cast<std::uint64_t>(i));
      const double v1 = sample_product(kind, m, q1, 20, a).value;
      const double v2 = sample_product(kind, m, q2, 20, b).value;
      ASSERT_EQ(v2, 2.0 * v1);
    }
  }
}

TEST(Products, FixedNuIsUsed) {
  const auto m = dense_model(4, 2, 17, false);
  const Eigen::VectorXd nu = Eigen::Vector2d(0.25, 3.0);
  RngStream r(9, 9);
  EXPECT_EQ(sample_cov_product(m, Eigen::VectorXd::Ones(4), 10, r, nu).nu_used, nu);
  EXPECT_EQ(sample_precision_product(m, Eigen::VectorXd::Ones(4), 10, r, nu).nu_used, nu);
  EXPECT_THROW(sample_cov_product(m, Eigen::VectorXd::Ones(4), 10, r, Eigen::VectorXd::Ones(3)), InvalidDimension);
}

TEST(Products, ConditionalMeans) {
  const ModelSpec m = generate_random_model(100, 10, 5);
  const Eigen::VectorXd l = Eigen::VectorXd::Ones(100);
  const Quadratics quad(m, l);
  const Eigen::VectorXd nu = Eigen::VectorXd::Constant(10, 0.8);
  const NuForms f = quad.forms(nu);
  const int reps = 100000;
  const std::size_t n = 1000;
  {
    std::vector<double> v;
    for (int i = 0; i < reps; ++i) {
      RngStream r(10, static_cast<std::uint64_t>(i));
      v.push_back(sample_cov_product(m, quad, n, r, nu).value);
    }
    const auto mo = moments(v);
    EXPECT_LE(std::abs(mo.mean - f.l_sigma_mu), 3.0 * std::sqrt(mo.variance / reps));
  }
  {
    std::vector<double> v;
    for (int i = 0; i < reps; ++i) {
      RngStream r(11, static_cast<std::uint64_t>(i));
      v.push_back(sample_precision_product(m, quad, n, r, nu).value);
    }
    const auto mo = moments(v);
    // Exact finite-sample mean: E[1/chi^2_{n-p}] = 1/(n-p-2).
    const double exact = static_cast<double>(n - 1) / static_cast<double>(n - 100 - 2) * f.l_sinv_mu;
    EXPECT_LE(std::abs(mo.mean - exact), 3.0 * std::sqrt(mo.variance / reps));
  }
}
