#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "mvlmn/asymptotics.hpp"
#include "mvlmn/density.hpp"
#include "mvlmn/distributions.hpp"
#include "mvlmn/errors.hpp"
#include "mvlmn/figures.hpp"
#include "mvlmn/harness.hpp"
#include "mvlmn/model.hpp"
#include "mvlmn/rng.hpp"
#include "mvlmn/stats.hpp"
#include "mvlmn/stochastic_reps.hpp"

namespace mvlmn {

/// One numeric check: passes when observed <= tolerance.
struct Check {
  std::string name;
  double tolerance = 0.0;
  double observed = 0.0;
  bool passed = false;
};

inline Check make_check(std::string name, double observed, double tolerance) {
  return {std::move(name), tolerance, observed, std::isfinite(observed) && observed <= tolerance};
}

inline nlohmann::json checks_to_json(const std::vector<Check>& checks) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& c : checks) {
    arr.push_back({{"name", c.name}, {"tolerance", c.tolerance}, {"observed", c.observed}, {"passed", c.passed}});
  }
  return arr;
}

// ---------------------------------------------------------------- oracle suite

/// Two-sample KS between the stochastic representation and the brute-force
/// matrix oracle for the study model at (p, n, q), l = 1_p.
inline double representation_vs_oracle_ks(ProductKind kind, std::size_t p, std::size_t n, std::size_t q,
                                          NuFamily family, std::size_t reps, std::uint64_t seed) {
  const ModelSpec model = generate_random_model(p, q, seed ^ 0x9e3779b97f4a7c15ULL, make_nu(family, q));
  const Eigen::VectorXd l = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(p));
  const Quadratics quad(model, l);
  std::vector<double> rep(reps), ora(reps);
  for (std::size_t i = 0; i < reps; ++i) {
    RngStream a(seed, 2 * i);
    RngStream b(seed, 2 * i + 1);
    rep[i] = sample_product(kind, model, quad, n, a).value;
    ora[i] = oracle_product(kind, model, l, n, b).value;
  }
  return two_sample_ks(rep, ora);
}

inline std::string config_label(ProductKind kind, std::size_t p, std::size_t n, std::size_t q, NuFamily f) {
  return std::string(kind == ProductKind::CovTimesMean ? "cov" : "precision") + " (p,n,q)=(" + std::to_string(p) +
         "," + std::to_string(n) + "," + std::to_string(q) + ") nu=" + (f == NuFamily::Gal ? "gal" : "tn");
}

inline std::vector<Check> oracle_suite(std::uint64_t seed, std::size_t reps = 5000, double tol = 0.04) {
  std::vector<Check> out;
  const std::size_t dims[3][3] = {{3, 12, 1}, {5, 20, 2}, {8, 25, 3}};
  std::uint64_t k = 0;
  for (const auto& d : dims) {
    for (auto kind : {ProductKind::CovTimesMean, ProductKind::PrecisionTimesMean}) {
      for (auto fam : {NuFamily::TruncatedNormal, NuFamily::Gal}) {
        const double ks = representation_vs_oracle_ks(kind, d[0], d[1], d[2], fam, reps, seed * 1000 + k++);
        out.push_back(make_check("two-sample KS " + config_label(kind, d[0], d[1], d[2], fam), ks, tol));
      }
    }
  }
  const double singular = representation_vs_oracle_ks(ProductKind::CovTimesMean, 15, 10, 2, NuFamily::TruncatedNormal,
                                                      reps, seed * 1000 + k++);
  out.push_back(make_check("two-sample KS singular " +
                               config_label(ProductKind::CovTimesMean, 15, 10, 2, NuFamily::TruncatedNormal),
                           singular, tol));
  return out;
}

// ---------------------------------------------------------------- moments suite

struct IndependenceResult {
  double corr_trace = 0.0;
  double corr_quadratic = 0.0;
  double wishart_rel_error = 0.0;
};

/// Oracle replicates at (p, n): correlations of tr S and l'Sl with l'xbar,
/// and the relative Frobenius error of mean (n-1)S against (n-1)Sigma.
inline IndependenceResult independence_and_wishart(std::size_t p, std::size_t n, std::size_t reps, std::uint64_t seed) {
  const ModelSpec model = generate_random_model(p, 2, seed ^ 0x5851f42d4c957f2dULL);
  const Eigen::VectorXd l = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(p));
  std::vector<double> tr(reps), lsl(reps), lx(reps);
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p));
  for (std::size_t i = 0; i < reps; ++i) {
    RngStream r(seed, i);
    const SampleMoments m = sample_mean_and_cov(sample_data_matrix(model, n, r).x);
    tr[i] = m.s_matrix.trace();
    lsl[i] = l.dot(m.s_matrix * l);
    lx[i] = l.dot(m.xbar);
    acc += m.s_matrix;
  }
  acc /= static_cast<double>(reps);
  const double dof = static_cast<double>(n - 1);
  IndependenceResult res;
  res.corr_trace = correlation(tr, lx);
  res.corr_quadratic = correlation(lsl, lx);
  res.wishart_rel_error = (dof * acc - dof * model.sigma()).norm() / (dof * model.sigma()).norm();
  return res;
}

inline double relative_mc_error(std::size_t reps, std::uint64_t seed, double expect,
                                const std::function<double(RngStream&)>& draw) {
  double acc = 0.0;
  for (std::size_t i = 0; i < reps; ++i) {
    RngStream r(seed, i);
    acc += draw(r);
  }
  return std::abs(acc / static_cast<double>(reps) / expect - 1.0);
}

inline std::vector<Check> moments_suite(std::uint64_t seed) {
  std::vector<Check> out;
  const std::size_t reps = 100000;
  out.push_back(make_check("chi^2_100 mean relative error",
                           relative_mc_error(reps, seed + 1, 100.0, [](RngStream& r) { return sample_chi_squared(100, r); }),
                           0.01));
  out.push_back(make_check(
      "noncentral chi^2_50(25) mean relative error",
      relative_mc_error(reps, seed + 2, 75.0, [](RngStream& r) { return sample_noncentral_chi_squared(50, 25.0, r); }),
      0.01));
  out.push_back(make_check(
      "F_{10,10} mean relative error",
      relative_mc_error(reps, seed + 3, 1.25, [](RngStream& r) { return sample_noncentral_f(10, 10, 0.0, r); }), 0.03));
  out.push_back(make_check("F_{5,30}(20) mean relative error",
                           relative_mc_error(reps, seed + 4, 30.0 * 25.0 / (5.0 * 28.0),
                                             [](RngStream& r) { return sample_noncentral_f(5, 30, 20.0, r); }),
                           0.03));
  const auto tn = NuDistribution::standard_truncated_normal(3);
  out.push_back(make_check("TN(I) component mean relative error",
                           relative_mc_error(reps, seed + 5, std::sqrt(2.0 / std::numbers::pi),
                                             [&](RngStream& r) { return sample_nu(tn, r)(0); }),
                           0.02));
  const auto gal = NuDistribution::standard_gal(3);
  out.push_back(make_check("GAL(1,I,10) component mean relative error",
                           relative_mc_error(reps, seed + 6, 10.0, [&](RngStream& r) { return sample_nu(gal, r)(1); }),
                           0.02));
  const auto ind = independence_and_wishart(4, 20, 10000, seed + 7);
  out.push_back(make_check("|corr(tr S, l'xbar)|", std::abs(ind.corr_trace), 0.05));
  out.push_back(make_check("|corr(l'Sl, l'xbar)|", std::abs(ind.corr_quadratic), 0.05));
  out.push_back(make_check("mean (n-1)S relative Frobenius error", ind.wishart_rel_error, 0.02));
  return out;
}

// ---------------------------------------------------------------- variance suite

/// |sample variance / asymptotic variance - 1| of sqrt(n)(product - center)
/// with nu fixed at one draw from the mixing law, study model, l = 1_p, c = p/n.
inline double conditional_variance_error(ProductKind kind, std::size_t p, std::size_t n, std::size_t reps,
                                         std::uint64_t seed) {
  const ModelSpec model = generate_random_model(p, 10, seed);
  const Eigen::VectorXd l = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(p));
  const Quadratics quad(model, l);
  RngStream nu_rng(seed, ~std::uint64_t{0});
  const Eigen::VectorXd nu = sample_nu(model.nu(), nu_rng);
  const double c = static_cast<double>(p) / static_cast<double>(n);
  const AsymptoticParams ap = asymptotic_params(quad, kind, c, nu);
  const double root_n = std::sqrt(static_cast<double>(n));
  std::vector<double> v(reps);
  for (std::size_t i = 0; i < reps; ++i) {
    RngStream r(seed, i);
    v[i] = root_n * (sample_product(kind, model, quad, n, r, nu).value - ap.center);
  }
  return std::abs(moments(v).variance / ap.variance - 1.0);
}

/// Worst relative gap between the two algebraic forms of sigma~^2_nu over
/// random dense instances.
inline double variance_form_gap(std::size_t instances, std::uint64_t seed) {
  double worst = 0.0;
  for (std::size_t k = 0; k < instances; ++k) {
    RngStream r(seed, k);
    const int p = 6;
    const int q = 2;
    Eigen::MatrixXd a(p, p);
    for (int i = 0; i < p; ++i)
      for (int j = 0; j < p; ++j) a(i, j) = r.normal();
    Eigen::VectorXd mu(p), l(p);
    Eigen::MatrixXd b(p, q);
    for (int i = 0; i < p; ++i) {
      mu(i) = r.normal();
      l(i) = r.normal();
      for (int j = 0; j < q; ++j) b(i, j) = r.uniform();
    }
    const ModelSpec m(mu, a * a.transpose() + 0.1 * Eigen::MatrixXd::Identity(p, p), b,
                      NuDistribution::standard_truncated_normal(q));
    const Quadratics quad(m, l);
    const double c = 0.99 * r.uniform();
    const auto f = sigma2_tilde_forms(quad, c, quad.forms(sample_nu(m.nu(), r)));
    worst = std::max(worst, std::abs(f.statement - f.proof) / f.statement);
  }
  return worst;
}

inline std::vector<Check> variance_suite(std::uint64_t seed) {
  std::vector<Check> out;
  out.push_back(make_check("sigma~^2 statement vs proof form, max relative gap (1000 instances)",
                           variance_form_gap(1000, seed), 1e-12));
  out.push_back(make_check("conditional variance l'S xbar, p=200 n=2000 N=1e5, relative error",
                           conditional_variance_error(ProductKind::CovTimesMean, 200, 2000, 100000, seed + 1), 0.05));
  out.push_back(make_check("conditional variance l'S^-1 xbar, p=100 n=1000 N=1e5, relative error",
                           conditional_variance_error(ProductKind::PrecisionTimesMean, 100, 1000, 100000, seed + 2),
                           0.05));
  return out;
}

// ---------------------------------------------------------------- density suite

/// Random model with truncated-normal mixing and dense Sigma, Omega.
inline ModelSpec random_tn_model(std::size_t p, std::size_t q, std::uint64_t seed) {
  RngStream r(seed, 0);
  const auto pp = static_cast<Eigen::Index>(p);
  const auto qq = static_cast<Eigen::Index>(q);
  Eigen::MatrixXd a(pp, pp), c(qq, qq), b(pp, qq);
  Eigen::VectorXd mu(pp);
  for (Eigen::Index i = 0; i < pp; ++i) {
    mu(i) = r.normal();
    for (Eigen::Index j = 0; j < pp; ++j) a(i, j) = r.normal();
    for (Eigen::Index j = 0; j < qq; ++j) b(i, j) = r.normal();
  }
  for (Eigen::Index i = 0; i < qq; ++i)
    for (Eigen::Index j = 0; j < qq; ++j) c(i, j) = r.normal();
  return ModelSpec(mu, a * a.transpose() + 0.5 * Eigen::MatrixXd::Identity(pp, pp), b,
                   TruncatedNormalAbs{c * c.transpose() + 0.5 * Eigen::MatrixXd::Identity(qq, qq)});
}

/// Dense np x np covariance of vec(X) given an untruncated psi:
/// I_n (x) Sigma + 1_n 1_n' (x) B Omega B'.
inline Eigen::MatrixXd dense_f_matrix(const ModelSpec& m, std::size_t n) {
  const auto p = static_cast<Eigen::Index>(m.p());
  const auto nn = static_cast<Eigen::Index>(n);
  const auto& omega = std::get<TruncatedNormalAbs>(m.nu().law()).omega;
  const Eigen::MatrixXd bob = m.b() * omega * m.b().transpose();
  Eigen::MatrixXd f(nn * p, nn * p);
  for (Eigen::Index i = 0; i < nn; ++i)
    for (Eigen::Index j = 0; j < nn; ++j) f.block(i * p, j * p, p, p) = i == j ? Eigen::MatrixXd(bob + m.sigma()) : bob;
  return f;
}

/// Relative gap between log|F| from the identity and from the dense matrix.
inline double determinant_identity_gap(std::size_t p, std::size_t n, std::size_t q, std::uint64_t seed) {
  const ModelSpec m = random_tn_model(p, q, seed);
  const DensityWorkspace ws = build_workspace(m, n);
  const double dense = dense_f_matrix(m, n).partialPivLu().determinant();
  const double identity = std::exp(ws.log_det_f());
  return std::abs(identity - dense) / std::abs(dense);
}

inline ModelSpec scalar_tn_model(std::uint64_t seed) {
  RngStream r(seed, 1);
  return ModelSpec(Eigen::VectorXd::Constant(1, 2.0 * r.uniform() - 1.0),
                   Eigen::MatrixXd::Constant(1, 1, 0.5 + r.uniform()),
                   Eigen::MatrixXd::Constant(1, 1, 0.5 + r.uniform()),
                   TruncatedNormalAbs{Eigen::MatrixXd::Constant(1, 1, 0.5 + r.uniform())});
}

/// |integral of the density over R^2 - 1| at (p, n, q) = (1, 2, 1), by the
/// trapezoid rule on a box of +-14 standard deviations.
inline double normalization_error(const ModelSpec& m) {
  const DensityWorkspace ws = build_workspace(m, 2);
  const double omega = std::get<TruncatedNormalAbs>(m.nu().law()).omega(0, 0);
  const double b = m.b()(0, 0);
  const double center = m.mu()(0) + b * std::sqrt(2.0 * omega / std::numbers::pi);
  const double spread = std::sqrt(m.sigma()(0, 0) + b * b * omega);
  const double lo = center - 14.0 * spread;
  const double hi = center + 14.0 * spread;
  const int k = 600;
  const double h = (hi - lo) / k;
  double acc = 0.0;
  Eigen::MatrixXd z(1, 2);
  for (int i = 0; i <= k; ++i) {
    for (int j = 0; j <= k; ++j) {
      z << lo + i * h, lo + j * h;
      const double w = (i == 0 || i == k ? 0.5 : 1.0) * (j == 0 || j == k ? 0.5 : 1.0);
      acc += w * std::exp(log_density(ws, m, z));
    }
  }
  return std::abs(acc * h * h - 1.0);
}

/// Max absolute gap between the closed-form density and the direct 1-D
/// mixture integral over nu at a 9 x 9 grid of points, (p, n, q) = (1, 2, 1).
inline double mixture_agreement_gap(const ModelSpec& m) {
  const DensityWorkspace ws = build_workspace(m, 2);
  const double sd = std::sqrt(std::get<TruncatedNormalAbs>(m.nu().law()).omega(0, 0));
  auto half_normal = [sd](double v) { return 2.0 * normal_pdf(v / sd) / sd; };
  double worst = 0.0;
  Eigen::MatrixXd z(1, 2);
  for (int i = 0; i < 9; ++i) {
    for (int j = 0; j < 9; ++j) {
      z << -3.0 + i, -3.0 + j;
      const double closed = std::exp(log_density(ws, m, z));
      const double mix = mixture_density_1d(m, z, half_normal, 0.0, 40.0 * sd);
      worst = std::max(worst, std::abs(closed - mix));
    }
  }
  return worst;
}

inline std::vector<Check> density_suite(std::uint64_t seed) {
  std::vector<Check> out;
  out.push_back(make_check("determinant identity (p,n,q)=(2,3,2), relative gap",
                           determinant_identity_gap(2, 3, 2, seed), 1e-8));
  out.push_back(make_check("determinant identity (p,n,q)=(3,2,1), relative gap",
                           determinant_identity_gap(3, 2, 1, seed + 1), 1e-8));
  const ModelSpec m = scalar_tn_model(seed + 2);
  out.push_back(make_check("normalization (p,n,q)=(1,2,1), |integral - 1|", normalization_error(m), 1e-3));
  out.push_back(make_check("closed form vs mixture integral (p,n,q)=(1,2,1), max abs gap",
                           mixture_agreement_gap(m), 1e-6));
  return out;
}

inline const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names = {"oracle", "moments", "variance", "density", "all"};
  return names;
}

inline std::vector<Check> run_suite(const std::string& suite, std::uint64_t seed) {
  if (suite == "oracle") return oracle_suite(seed);
  if (suite == "moments") return moments_suite(seed);
  if (suite == "variance") return variance_suite(seed);
  if (suite == "density") return density_suite(seed);
  if (suite == "all") {
    std::vector<Check> all;
    for (const char* s : {"oracle", "moments", "variance", "density"}) {
      auto part = run_suite(s, seed);
      for (auto& c : part) c.name = std::string(s) + ": " + c.name;
      all.insert(all.end(), part.begin(), part.end());
    }
    return all;
  }
  throw InvalidInput("unknown suite '" + suite + "'");
}

}  // namespace mvlmn
