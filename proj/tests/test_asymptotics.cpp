#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "mvlmn/asymptotics.hpp"
#include "mvlmn/harness.hpp"

using namespace mvlmn;

namespace {

ModelSpec diag_model(const Eigen::VectorXd& diag, const Eigen::VectorXd& mu, int q = 1) {
  return ModelSpec(mu, Eigen::MatrixXd(diag.asDiagonal()), Eigen::MatrixXd::Zero(diag.size(), q),
                   NuDistribution::standard_truncated_normal(q));
}

}  // namespace

TEST(Sigma2Nu, IdentityExample) {
  const auto m = diag_model(Eigen::VectorXd::Ones(4), Eigen::VectorXd::Zero(4));
  Eigen::VectorXd e1 = Eigen::VectorXd::Zero(4);
  e1(0) = 1.0;
  EXPECT_NEAR(sigma2_nu(m, e1, 0.5, Eigen::VectorXd::Zero(1)), 1.5, 1e-14);
}

TEST(Sigma2Nu, HandArithmetic) {
  const auto m = diag_model(Eigen::Vector2d(1.0, 4.0), Eigen::Vector2d(1.0, 0.0));
  EXPECT_NEAR(sigma2_nu(m, Eigen::Vector2d(1.0, 0.0), 0.1, Eigen::VectorXd::Zero(1)), 3.85, 1e-13);
  // Frobenius variant: c tr(Sigma^2) = 1.7 instead of 0.85.
  EXPECT_NEAR(sigma2_nu(m, Eigen::Vector2d(1.0, 0.0), 0.1, Eigen::VectorXd::Zero(1),
                        VarianceConvention::FrobeniusCompat),
              4.7, 1e-13);
  EXPECT_THROW(sigma2_nu(m, Eigen::Vector2d(1.0, 0.0), -0.1, Eigen::VectorXd::Zero(1)), InvalidInput);
}

TEST(Sigma2Tilde, CollapsesForZeroMean) {
  const auto m = diag_model(Eigen::VectorXd::Ones(3), Eigen::VectorXd::Zero(3));
  const Eigen::Vector3d l(1.0, 2.0, -2.0);
  EXPECT_NEAR(sigma2_tilde_nu(m, l, 0.3, Eigen::VectorXd::Zero(1)), 9.0 / std::pow(0.7, 3), 1e-12);
}

TEST(Sigma2Tilde, BothFormsHandArithmetic) {
  const auto m = diag_model(Eigen::VectorXd::Ones(2), Eigen::Vector2d(1.0, 1.0));
  const Quadratics q(m, Eigen::Vector2d(1.0, 0.0));
  const auto forms = sigma2_tilde_forms(q, 0.0, q.forms(Eigen::VectorXd::Zero(1)));
  EXPECT_NEAR(forms.statement, 4.0, 1e-14);
  EXPECT_NEAR(forms.proof, 4.0, 1e-14);
}

TEST(Sigma2Tilde, RegimeAndZeroVector) {
  const auto m = diag_model(Eigen::VectorXd::Ones(2), Eigen::Vector2d(1.0, 1.0));
  EXPECT_THROW(sigma2_tilde_nu(m, Eigen::Vector2d(1.0, 0.0), 1.0, Eigen::VectorXd::Zero(1)), RegimeError);
  EXPECT_THROW(sigma2_tilde_nu(m, Eigen::Vector2d::Zero(), 0.5, Eigen::VectorXd::Zero(1)), ZeroVector);
}

TEST(Sigma2Tilde, FormIdentityRandomInstances) {
  double worst = 0.0;
  for (int k = 0; k < 1000; ++k) {
    RngStream r(123, static_cast<std::uint64_t>(k));
    const int p = 6;
    Eigen::MatrixXd a(p, p);
    for (int i = 0; i < p; ++i)
      for (int j = 0; j < p; ++j) a(i, j) = r.normal();
    const Eigen::MatrixXd sigma = a * a.transpose() + 0.1 * Eigen::MatrixXd::Identity(p, p);
    Eigen::VectorXd mu(p), l(p);
    Eigen::MatrixXd b(p, 2);
    for (int i = 0; i < p; ++i) {
      mu(i) = r.normal();
      l(i) = r.normal();
      b(i, 0) = r.uniform();
      b(i, 1) = r.uniform();
    }
    const ModelSpec m(mu, sigma, b, NuDistribution::standard_truncated_normal(2));
    const Quadratics q(m, l);
    const auto forms = sigma2_tilde_forms(q, r.uniform() * 0.99, q.forms(sample_nu(m.nu(), r)));
    worst = std::max(worst, std::abs(forms.statement - forms.proof) / forms.statement);
  }
  EXPECT_LE(worst, 1e-12);
}

TEST(Sigma2Tilde, MonotoneInC) {
  const auto m = diag_model(Eigen::Vector2d(0.5, 2.0), Eigen::Vector2d(1.0, -1.0));
  const Quadratics q(m, Eigen::Vector2d(1.0, 1.0));
  const auto f = q.forms(Eigen::VectorXd::Zero(1));
  double prev = 0.0;
  for (double c = 0.0; c < 0.99; c += 0.05) {
    const double v = sigma2_tilde_nu(q, c, f);
    EXPECT_GT(v, prev);
    prev = v;
  }
}

TEST(MeanMixingParams, SubstitutionIdentities) {
  const ModelSpec m = generate_random_model(8, 3, 4);
  const Eigen::VectorXd l = Eigen::VectorXd::Ones(8);
  const auto zero = mean_mixing_params(m, l, 0.4, Eigen::VectorXd::Zero(3), 20);
  EXPECT_DOUBLE_EQ(zero.sigma2, sigma2_nu(m, l, 0.4, Eigen::VectorXd::Zero(3)));
  EXPECT_NEAR(zero.gamma, 0.15, 1e-15);

  const Eigen::VectorXd omega = Eigen::VectorXd::Constant(3, std::sqrt(2.0 / std::numbers::pi));
  const auto cp = mean_mixing_params(m, l, 0.4, nu_mean(m.nu()), 20);
  EXPECT_NEAR(cp.sigma2, sigma2_nu(m, l, 0.4, omega), 1e-12 * cp.sigma2);
  ASSERT_TRUE(cp.sigma2_tilde.has_value());
  EXPECT_NEAR(*cp.sigma2_tilde, sigma2_tilde_nu(m, l, 0.4, omega), 1e-12 * *cp.sigma2_tilde);
  EXPECT_NEAR((cp.omega_cov - nu_covariance(m.nu())).norm(), 0.0, 1e-15);
  EXPECT_FALSE(mean_mixing_params(m, l, 1.5, omega, 20).sigma2_tilde.has_value());

  const ModelSpec nob(m.mu(), m.sigma(), Eigen::MatrixXd::Zero(8, 3), m.nu());
  const auto c0 = mean_mixing_params(nob, l, 0.4, omega, 20);
  EXPECT_NEAR(c0.sigma2, sigma2_nu(nob, l, 0.4, Eigen::Vector3d(5.0, 0.1, 2.0)), 1e-12 * c0.sigma2);
}

TEST(Standardize, CenteringAndScaling) {
  const auto m = diag_model(Eigen::Vector2d(1.0, 4.0), Eigen::Vector2d(1.0, 0.0));
  const Eigen::Vector2d l(1.0, 0.0);
  const Quadratics q(m, l);
  const Eigen::VectorXd nu = Eigen::VectorXd::Zero(1);
  const auto ap = asymptotic_params(q, ProductKind::CovTimesMean, 0.1, nu);
  EXPECT_DOUBLE_EQ(ap.center, 1.0);
  EXPECT_NEAR(ap.variance, 3.85, 1e-13);
  std::vector<ProductDraw> draws = {{ap.center, nu}, {ap.center + 2.0, nu}};
  const auto z = standardize(draws, q, 0.1, 4, ProductKind::CovTimesMean);
  EXPECT_EQ(z[0], 0.0);
  EXPECT_NEAR(z[1], 2.0 * 2.0 / std::sqrt(3.85), 1e-13);
  // Doubling l doubles both the draw and sigma_nu, leaving the standardized value fixed.
  const Quadratics q2(m, 2.0 * l);
  const auto ap2 = asymptotic_params(q2, ProductKind::CovTimesMean, 0.1, nu);
  EXPECT_NEAR(std::sqrt(ap2.variance), 2.0 * std::sqrt(ap.variance), 1e-12);
  std::vector<ProductDraw> doubled = {{2.0 * draws[1].value, nu}};
  EXPECT_NEAR(standardize(doubled, q2, 0.1, 4, ProductKind::CovTimesMean)[0], z[1], 1e-13);
  const auto pa = asymptotic_params(q, ProductKind::PrecisionTimesMean, 0.5, nu);
  EXPECT_DOUBLE_EQ(pa.center, 2.0);
  EXPECT_THROW(standardize(std::vector<ProductDraw>{}, q, 0.1, 4, ProductKind::CovTimesMean), InvalidInput);
  EXPECT_THROW(standardize(draws, m, Eigen::Vector2d::Zero(), 0.1, 4, ProductKind::CovTimesMean), ZeroVector);
}

TEST(Standardize, CltAtSmallestFigureConfig) {
  ExperimentConfig cfg;
  cfg.p = 50;
  cfg.n = 500;
  cfg.c = 0.1;
  cfg.n_reps = 100000;
  const auto set = run_experiment(cfg, 1);
  EXPECT_LE(ks_statistic(set.standardized), 0.02);
}
