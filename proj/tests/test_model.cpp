#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "mvlmn/model.hpp"
#include "mvlmn/stats.hpp"

using namespace mvlmn;

namespace {

Eigen::MatrixXd random_spd(int p, std::uint64_t seed) {
  RngStream r(seed, 99);
  Eigen::MatrixXd a(p, p);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j) a(i, j) = r.normal();
  return a * a.transpose() + 0.5 * Eigen::MatrixXd::Identity(p, p);
}

ModelSpec simple_model(int p, int q, std::uint64_t seed) {
  RngStream r(seed, 98);
  Eigen::VectorXd mu(p);
  Eigen::MatrixXd b(p, q);
  for (int i = 0; i < p; ++i) {
    mu(i) = r.uniform() * 2 - 1;
    for (int j = 0; j < q; ++j) b(i, j) = r.uniform();
  }
  return ModelSpec(mu, random_spd(p, seed), b, NuDistribution::standard_truncated_normal(q));
}

}  // namespace

TEST(DecomposeSigma, Identity) {
  const auto d = decompose_sigma(Eigen::MatrixXd::Identity(4, 4));
  EXPECT_TRUE(d.eigenvalues.isApproxToConstant(1.0));
  EXPECT_EQ((d.sqrt_factor * d.sqrt_factor.transpose() - Eigen::MatrixXd::Identity(4, 4)).norm(), 0.0);
  EXPECT_TRUE(d.inverse_available);
}

TEST(DecomposeSigma, Diagonal) {
  Eigen::MatrixXd s(2, 2);
  s << 4.0, 0.0, 0.0, 1.0;
  const auto d = decompose_sigma(s);
  EXPECT_DOUBLE_EQ(d.eigenvalues(0), 1.0);
  EXPECT_DOUBLE_EQ(d.eigenvalues(1), 4.0);
  EXPECT_DOUBLE_EQ(std::abs(d.eigenvectors(1, 0)), 1.0);
  EXPECT_DOUBLE_EQ(std::abs(d.eigenvectors(0, 1)), 1.0);
}

TEST(DecomposeSigma, RandomReconstruction) {
  const Eigen::MatrixXd s = random_spd(6, 3);
  const auto d = decompose_sigma(s);
  const Eigen::MatrixXd rec = d.eigenvectors * d.eigenvalues.asDiagonal() * d.eigenvectors.transpose();
  EXPECT_LE((s - rec).norm() / s.norm(), 1e-10);
  EXPECT_LE((s - d.sqrt_factor * d.sqrt_factor.transpose()).norm() / s.norm(), 1e-10);
  EXPECT_LE((d.inverse() * s - Eigen::MatrixXd::Identity(6, 6)).norm(), 1e-9);
  EXPECT_NEAR(d.log_det(), std::log(s.determinant()), 1e-9);
  for (int i = 1; i < 6; ++i) EXPECT_LE(d.eigenvalues(i - 1), d.eigenvalues(i));
}

TEST(DecomposeSigma, RejectsBadInput) {
  Eigen::MatrixXd s(2, 2);
  s << 1.0, 2.0, 2.0, 1.0;
  try {
    decompose_sigma(s);
    FAIL() << "expected NotPositiveDefinite";
  } catch (const NotPositiveDefinite& e) {
    EXPECT_NEAR(e.smallest_eigenvalue(), -1.0, 1e-12);
  }
  Eigen::MatrixXd asym(2, 2);
  asym << 1.0, 0.5, 0.0, 1.0;
  EXPECT_THROW(decompose_sigma(asym), InvalidInput);
  EXPECT_THROW(decompose_sigma(Eigen::MatrixXd(2, 3)), InvalidDimension);
}

TEST(ModelSpec, DimensionChecks) {
  EXPECT_THROW(ModelSpec(Eigen::VectorXd::Zero(3), Eigen::MatrixXd::Identity(2, 2), Eigen::MatrixXd::Zero(3, 1),
                         NuDistribution::standard_truncated_normal(1)),
               InvalidDimension);
  EXPECT_THROW(ModelSpec(Eigen::VectorXd::Zero(2), Eigen::MatrixXd::Identity(2, 2), Eigen::MatrixXd::Zero(2, 2),
                         NuDistribution::standard_truncated_normal(1)),
               InvalidDimension);
}

TEST(VerifyAssumptions, DiagonalExamples) {
  Eigen::VectorXd mu(2);
  mu << 0.5, -0.2;
  Eigen::MatrixXd s(2, 2);
  s << 2.0, 0.0, 0.0, 3.0;
  const ModelSpec m(mu, s, Eigen::MatrixXd::Zero(2, 1), NuDistribution::standard_truncated_normal(1));
  const auto r = verify_assumptions(m, Eigen::VectorXd::Ones(2));
  EXPECT_DOUBLE_EQ(r.max_abs_u_mu, 0.5);
  EXPECT_DOUBLE_EQ(r.max_abs_u_b, 0.0);
  EXPECT_DOUBLE_EQ(r.max_abs_u_l, 1.0);
  EXPECT_DOUBLE_EQ(r.lambda_min, 2.0);
  EXPECT_DOUBLE_EQ(r.lambda_max, 3.0);
  EXPECT_THROW(verify_assumptions(m, Eigen::VectorXd::Ones(3)), InvalidDimension);
}

TEST(VerifyMixingAssumptions, Values) {
  Eigen::MatrixXd b(2, 1);
  b << 1.0, 2.0;
  const ModelSpec m(Eigen::VectorXd::Zero(2), Eigen::MatrixXd::Identity(2, 2), b,
                    NuDistribution::standard_truncated_normal(1));
  const auto r = verify_mixing_assumptions(m, Eigen::VectorXd::Constant(1, 0.5), Eigen::MatrixXd::Constant(1, 1, 2.0));
  EXPECT_NEAR(r.max_abs_u_b_omega, 1.0, 1e-14);
  EXPECT_NEAR(r.spectral_norm_b_omega_bt, 10.0, 1e-12);
}

TEST(MuNu, Examples) {
  Eigen::VectorXd mu(2);
  mu << 0.3, 0.7;
  const ModelSpec zero_b(mu, Eigen::MatrixXd::Identity(2, 2), Eigen::MatrixXd::Zero(2, 2),
                         NuDistribution::standard_truncated_normal(2));
  EXPECT_EQ(mu_nu(zero_b, Eigen::Vector2d(3, 4)), mu);
  const ModelSpec ident(Eigen::VectorXd::Zero(2), Eigen::MatrixXd::Identity(2, 2), Eigen::MatrixXd::Identity(2, 2),
                        NuDistribution::standard_truncated_normal(2));
  EXPECT_EQ(mu_nu(ident, Eigen::Vector2d(1, 2)), Eigen::Vector2d(1, 2));
  EXPECT_EQ(mu_nu(ident, Eigen::Vector2d::Zero()), Eigen::Vector2d::Zero());
  EXPECT_THROW(mu_nu(ident, Eigen::VectorXd::Zero(3)), InvalidDimension);
}

TEST(SampleDataMatrix, NearDegenerateNoise) {
  Eigen::VectorXd mu(3);
  mu << 1.0, -2.0, 0.5;
  const ModelSpec m(mu, 1e-12 * Eigen::MatrixXd::Identity(3, 3), Eigen::MatrixXd::Zero(3, 1),
                    NuDistribution::standard_truncated_normal(1));
  RngStream r(1, 0);
  const auto d = sample_data_matrix(m, 50, r);
  EXPECT_LE((d.x.colwise() - mu).cwiseAbs().maxCoeff(), 1e-4);
  EXPECT_THROW(sample_data_matrix(m, 1, r), InvalidDimension);
}

TEST(SampleDataMatrix, ColumnMeanAndResidual) {
  Eigen::VectorXd mu(2);
  mu << 0.5, -0.5;
  Eigen::MatrixXd b(2, 1);
  b << 1.0, 2.0;
  const ModelSpec m(mu, Eigen::MatrixXd::Identity(2, 2), b, NuDistribution::standard_truncated_normal(1));
  RngStream r(2, 0);
  const auto d = sample_data_matrix(m, 100000, r);
  const Eigen::VectorXd colmean = d.x.rowwise().mean();
  EXPECT_LE((colmean - mu_nu(m, d.nu)).cwiseAbs().maxCoeff(), 0.02);
  // Averaging over nu: E x = mu + B E nu, checked over many small draws.
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(2);
  const int reps = 20000;
  for (int i = 0; i < reps; ++i) {
    RngStream s(3, static_cast<std::uint64_t>(i));
    acc += sample_data_matrix(m, 2, s).x.col(0);
  }
  acc /= reps;
  const Eigen::VectorXd expect = mu + b * std::sqrt(2.0 / std::numbers::pi);
  EXPECT_LE((acc - expect).cwiseAbs().maxCoeff(), 0.05);
}

TEST(SampleMeanAndCov, HandArithmetic) {
  Eigen::MatrixXd x(1, 2);
  x << 1.0, 3.0;
  const auto m = sample_mean_and_cov(x);
  EXPECT_DOUBLE_EQ(m.xbar(0), 2.0);
  EXPECT_DOUBLE_EQ(m.s_matrix(0, 0), 2.0);
  EXPECT_EQ(m.n_used, 2u);
  Eigen::MatrixXd same = Eigen::MatrixXd::Constant(3, 5, 1.5);
  EXPECT_EQ(sample_mean_and_cov(same).s_matrix.norm(), 0.0);
  EXPECT_THROW(sample_mean_and_cov(Eigen::MatrixXd::Zero(2, 1)), InvalidDimension);
}

TEST(SampleMeanAndCov, WishartMeanAndIndependence) {
  const ModelSpec m = simple_model(4, 2, 17);
  const std::size_t n = 20;
  const int reps = 10000;
  const Eigen::VectorXd l = Eigen::VectorXd::Ones(4);
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(4, 4);
  std::vector<double> tr, lsl, lx;
  for (int i = 0; i < reps; ++i) {
    RngStream r(21, static_cast<std::uint64_t>(i));
    const auto mom = sample_mean_and_cov(sample_data_matrix(m, n, r).x);
    acc += mom.s_matrix;
    tr.push_back(mom.s_matrix.trace());
    lsl.push_back(l.dot(mom.s_matrix * l));
    lx.push_back(l.dot(mom.xbar));
  }
  acc /= reps;
  EXPECT_LE((acc - m.sigma()).norm() / m.sigma().norm(), 0.02);
  EXPECT_LE(std::abs(correlation(tr, lx)), 0.05);
  EXPECT_LE(std::abs(correlation(lsl, lx)), 0.05);
}

TEST(SampleMeanAndCov, MeanMarginalGivenNu) {
  const ModelSpec m = simple_model(4, 2, 23);
  const std::size_t n = 50;
  const int reps = 10000;
  Eigen::VectorXd s = Eigen::VectorXd::Zero(4);
  Eigen::MatrixXd ss = Eigen::MatrixXd::Zero(4, 4);
  for (int i = 0; i < reps; ++i) {
    RngStream r(29, static_cast<std::uint64_t>(i));
    const auto d = sample_data_matrix(m, n, r);
    const Eigen::VectorXd v = sample_mean_and_cov(d.x).xbar - m.b() * d.nu;
    s += v;
    ss += v * v.transpose();
  }
  const Eigen::VectorXd mean = s / reps;
  const Eigen::MatrixXd cov = (ss - reps * mean * mean.transpose()) / (reps - 1);
  const Eigen::MatrixXd target = m.sigma() / static_cast<double>(n);
  for (int j = 0; j < 4; ++j) {
    const double se = std::sqrt(target(j, j) / reps);
    EXPECT_LE(std::abs(mean(j) - m.mu()(j)), 3.0 * se);
  }
  EXPECT_LE((cov - target).norm() / target.norm(), 0.05);
}

TEST(SampleMeanAndCov, TraceLawDoesNotDependOnNu) {
  const ModelSpec a = simple_model(3, 2, 31);
  const ModelSpec b(a.mu(), a.sigma(), a.b(), NuDistribution::standard_gal(2));
  std::vector<double> ta, tb;
  for (int i = 0; i < 10000; ++i) {
    RngStream ra(37, static_cast<std::uint64_t>(i)), rb(41, static_cast<std::uint64_t>(i));
    ta.push_back(sample_mean_and_cov(sample_data_matrix(a, 10, ra).x).s_matrix.trace());
    tb.push_back(sample_mean_and_cov(sample_data_matrix(b, 10, rb).x).s_matrix.trace());
  }
  EXPECT_LE(two_sample_ks(ta, tb), two_sample_ks_critical_1pct(10000, 10000));
}
