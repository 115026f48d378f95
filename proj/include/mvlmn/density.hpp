#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numbers>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "mvlmn/distributions.hpp"
#include "mvlmn/errors.hpp"
#include "mvlmn/model.hpp"
#include "mvlmn/rng.hpp"
#include "mvlmn/stats.hpp"

namespace mvlmn {

struct OrthantEstimate {
  double value = 0.0;
  double std_error = 0.0;
  std::size_t points = 0;
};

namespace detail {

/// First primes, used for the Richtmyer lattice generators sqrt(prime).
inline constexpr std::array<int, 40> kPrimes = {
    2,  3,  5,  7,  11, 13, 17, 19, 23, 29, 31, 37, 41, 43,  47,  53,  59,  61,  67,  71,
    73, 79, 83, 89, 97, 101, 103, 107, 109, 113, 127, 131, 137, 139, 149, 151, 157, 163, 167, 173};

/// Cholesky factor of the permuted covariance together with the permuted
/// upper limits, ordered so the most constrained variables come first.
struct OrderedProblem {
  Eigen::MatrixXd chol;
  Eigen::VectorXd upper;
};

inline OrderedProblem reorder_for_sov(Eigen::VectorXd upper, Eigen::MatrixXd cov) {
  const Eigen::Index q = upper.size();
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(q, q);
  Eigen::VectorXd y = Eigen::VectorXd::Zero(q);
  for (Eigen::Index i = 0; i < q; ++i) {
    Eigen::Index best = i;
    double best_prob = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = i; j < q; ++j) {
      double var = cov(j, j);
      double shift = 0.0;
      for (Eigen::Index k = 0; k < i; ++k) {
        var -= l(j, k) * l(j, k);
        shift += l(j, k) * y(k);
      }
      if (var <= 0.0) throw NotPositiveDefinite("orthant covariance is not positive definite", var);
      const double prob = normal_cdf((upper(j) - shift) / std::sqrt(var));
      if (prob < best_prob) {
        best_prob = prob;
        best = j;
      }
    }
    if (best != i) {
      std::swap(upper(i), upper(best));
      cov.row(i).swap(cov.row(best));
      cov.col(i).swap(cov.col(best));
      l.row(i).swap(l.row(best));
    }
    double var = cov(i, i);
    for (Eigen::Index k = 0; k < i; ++k) var -= l(i, k) * l(i, k);
    l(i, i) = std::sqrt(var);
    for (Eigen::Index j = i + 1; j < q; ++j) {
      double v = cov(j, i);
      for (Eigen::Index k = 0; k < i; ++k) v -= l(j, k) * l(i, k);
      l(j, i) = v / l(i, i);
    }
    double shift = 0.0;
    for (Eigen::Index k = 0; k < i; ++k) shift += l(i, k) * y(k);
    const double b = (upper(i) - shift) / l(i, i);
    const double pb = normal_cdf(b);
    // Mean of a standard normal truncated to (-inf, b].
    y(i) = pb > 0.0 ? -normal_pdf(b) / pb : b;
  }
  return {l, upper};
}

/// Separation-of-variables integrand on [0,1]^{q-1}.
inline double sov_integrand(const OrderedProblem& prob, const double* w, Eigen::VectorXd& y) {
  const Eigen::Index q = prob.upper.size();
  double e = normal_cdf(prob.upper(0) / prob.chol(0, 0));
  double f = e;
  for (Eigen::Index i = 1; i < q; ++i) {
    y(i - 1) = normal_quantile(w[i - 1] * e);
    double shift = 0.0;
    for (Eigen::Index k = 0; k < i; ++k) shift += prob.chol(i, k) * y(k);
    e = normal_cdf((prob.upper(i) - shift) / prob.chol(i, i));
    f *= e;
    if (f == 0.0) break;
  }
  return f;
}

}  // namespace detail

/// P(Y <= upper) for Y ~ N_q(0, cov). Closed form for q = 1; otherwise
/// randomized lattice quasi-Monte Carlo on the Genz separation-of-variables
/// transform with variable reordering. Stops once the standard error across
/// random shifts is at most max(abs_tol, rel_tol * estimate).
inline OrthantEstimate orthant_probability(const Eigen::VectorXd& upper, const Eigen::MatrixXd& cov,
                                           double abs_tol, double rel_tol, RngStream& rng,
                                           std::size_t max_points = std::size_t{1} << 24) {
  const Eigen::Index q = upper.size();
  if (q == 0 || cov.rows() != q || cov.cols() != q) throw InvalidDimension("orthant: dimension mismatch");
  if (q == 1) {
    if (!(cov(0, 0) > 0.0)) throw NotPositiveDefinite("orthant covariance is not positive definite", cov(0, 0));
    return {normal_cdf(upper(0) / std::sqrt(cov(0, 0))), 0.0, 1};
  }
  if (static_cast<std::size_t>(q - 1) > detail::kPrimes.size()) {
    throw InvalidDimension("orthant: q too large for the lattice rule");
  }
  const auto prob = detail::reorder_for_sov(upper, cov);
  const Eigen::Index dim = q - 1;
  std::vector<double> gen(static_cast<std::size_t>(dim));
  for (Eigen::Index k = 0; k < dim; ++k) gen[static_cast<std::size_t>(k)] = std::sqrt(static_cast<double>(detail::kPrimes[static_cast<std::size_t>(k)]));

  constexpr int kShifts = 12;
  std::size_t per_shift = 256;
  std::vector<double> w(static_cast<std::size_t>(dim));
  Eigen::VectorXd y(q);
  OrthantEstimate est;
  for (;;) {
    double sum = 0.0;
    double sum_sq = 0.0;
    for (int r = 0; r < kShifts; ++r) {
      std::vector<double> shift(static_cast<std::size_t>(dim));
      for (auto& s : shift) s = rng.uniform();
      double acc = 0.0;
      for (std::size_t j = 1; j <= per_shift; ++j) {
        for (std::size_t k = 0; k < w.size(); ++k) {
          double x = static_cast<double>(j) * gen[k] + shift[k];
          x -= std::floor(x);
          w[k] = std::abs(2.0 * x - 1.0);  // baker's transform
        }
        acc += detail::sov_integrand(prob, w.data(), y);
      }
      acc /= static_cast<double>(per_shift);
      sum += acc;
      sum_sq += acc * acc;
    }
    est.value = sum / kShifts;
    const double var = std::max(0.0, (sum_sq - kShifts * est.value * est.value) / (kShifts - 1));
    est.std_error = std::sqrt(var / kShifts);
    est.points = per_shift * kShifts;
    if (est.std_error <= std::max(abs_tol, rel_tol * est.value)) return est;
    if (2 * per_shift * kShifts > max_points) {
      throw AccuracyNotMet("orthant probability: accuracy not reached within the point budget",
                           est.std_error);
    }
    per_shift *= 2;
  }
}

/// Phi_q(0; mean, cov) = P(Z <= 0) for Z ~ N_q(mean, cov), standard error <= accuracy.
inline double mvn_orthant_cdf(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov, double accuracy,
                              RngStream& rng) {
  if (!(accuracy > 0.0) || accuracy > 0.01) throw InvalidInput("mvn_orthant_cdf: accuracy must lie in (0, 0.01]");
  return orthant_probability(-mean, cov, accuracy, 0.0, rng).value;
}

inline double mvn_orthant_cdf(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov, double accuracy) {
  RngStream rng(0x6f7274686e74ULL, 0);
  return mvn_orthant_cdf(mean, cov, accuracy, rng);
}

/// Cached factors for the closed-form density under nu = |psi|, psi ~ N_q(0, Omega):
/// D = (n B'Sigma^{-1}B + Omega^{-1})^{-1}. The np x np matrix F is never formed;
/// log|F| = n log|Sigma| + log|Omega| - log|D|.
struct DensityWorkspace {
  Eigen::MatrixXd d_matrix;
  Eigen::MatrixXd sigma_inv;
  Eigen::MatrixXd bt_sigma_inv;  // B'Sigma^{-1}
  double log_det_sigma = 0.0;
  double log_det_omega = 0.0;
  double log_det_d = 0.0;
  double log_c = 0.0;  // log Phi_q(0; 0, Omega)
  bool b_is_zero = false;
  std::size_t n = 0;

  double log_det_f() const {
    return static_cast<double>(n) * log_det_sigma + log_det_omega - log_det_d;
  }
};

namespace detail {

inline double log_orthant(const Eigen::VectorXd& upper, const Eigen::MatrixXd& cov, RngStream& rng) {
  return std::log(orthant_probability(upper, cov, 0.0, 1e-5, rng).value);
}

}  // namespace detail

inline DensityWorkspace build_workspace(const ModelSpec& model, std::size_t n) {
  if (n == 0) throw InvalidDimension("build_workspace: n must be >= 1");
  const auto* tn = std::get_if<TruncatedNormalAbs>(&model.nu().law());
  if (tn == nullptr) {
    throw UnsupportedMixing("the closed-form density requires truncated-normal mixing");
  }
  const auto& dec = model.decomposition();
  DensityWorkspace ws;
  ws.n = n;
  ws.sigma_inv = dec.inverse();
  ws.log_det_sigma = dec.log_det();
  ws.bt_sigma_inv = model.b().transpose() * ws.sigma_inv;
  ws.b_is_zero = (model.b().array() == 0.0).all();
  const Eigen::MatrixXd bsb = ws.bt_sigma_inv * model.b();

  const Eigen::LLT<Eigen::MatrixXd> omega_llt(tn->omega);
  const Eigen::MatrixXd omega_inv = omega_llt.solve(Eigen::MatrixXd::Identity(tn->omega.rows(), tn->omega.cols()));
  ws.log_det_omega = 2.0 * omega_llt.matrixL().toDenseMatrix().diagonal().array().log().sum();

  const Eigen::MatrixXd d_inv = static_cast<double>(n) * bsb + omega_inv;
  const Eigen::LLT<Eigen::MatrixXd> d_inv_llt(d_inv);
  if (d_inv_llt.info() != Eigen::Success) throw NotPositiveDefinite("D^{-1} is not positive definite", 0.0);
  ws.d_matrix = d_inv_llt.solve(Eigen::MatrixXd::Identity(d_inv.rows(), d_inv.cols()));
  ws.d_matrix = 0.5 * (ws.d_matrix + ws.d_matrix.transpose()).eval();
  ws.log_det_d = -2.0 * d_inv_llt.matrixL().toDenseMatrix().diagonal().array().log().sum();

  // Determinant identity behind log|F|: |I_q - n D B'Sigma^{-1}B| = |D| / |Omega|.
  // With it the normalizing constant C~ of the closed form collapses to C.
  const Eigen::MatrixXd lemma =
      Eigen::MatrixXd::Identity(d_inv.rows(), d_inv.cols()) - static_cast<double>(n) * ws.d_matrix * bsb;
  const double lhs = std::log(std::abs(lemma.partialPivLu().determinant()));
  const double rhs = ws.log_det_d - ws.log_det_omega;
  if (std::abs(lhs - rhs) > 1e-8 * std::max(1.0, std::abs(rhs))) {
    throw Error("density workspace: determinant identity check failed");
  }

  const Eigen::Index q = tn->omega.rows();
  bool omega_diagonal = true;
  for (Eigen::Index i = 0; i < q; ++i)
    for (Eigen::Index j = 0; j < q; ++j)
      if (i != j && tn->omega(i, j) != 0.0) omega_diagonal = false;
  if (omega_diagonal) {
    ws.log_c = static_cast<double>(q) * std::log(0.5);
  } else {
    RngStream rng(0x636f6e7374ULL, 0);
    ws.log_c = detail::log_orthant(Eigen::VectorXd::Zero(q), tn->omega, rng);
  }
  return ws;
}

/// log f_X(Z) = -log C + log Phi_q(0; -D E vec(Z - mu 1'), D) + log phi_{pn}(vec(Z - mu 1'); 0, F).
inline double log_density(const DensityWorkspace& ws, const ModelSpec& model, const Eigen::MatrixXd& z,
                          RngStream& rng) {
  if (static_cast<std::size_t>(z.rows()) != model.p() || static_cast<std::size_t>(z.cols()) != ws.n) {
    throw InvalidDimension("log_density: Z must be p x n for the workspace's n");
  }
  if (ws.sigma_inv.rows() != z.rows() || static_cast<std::size_t>(ws.d_matrix.rows()) != model.q()) {
    throw InvalidDimension("log_density: workspace was built for a different model");
  }
  const Eigen::MatrixXd r = z.colwise() - model.mu();
  const double quad_iid = (r.transpose() * ws.sigma_inv * r).trace();
  const Eigen::VectorXd e = ws.bt_sigma_inv * r.rowwise().sum();
  const double quad = quad_iid - e.dot(ws.d_matrix * e);
  const double np = static_cast<double>(z.rows() * z.cols());
  const double log_phi = -0.5 * np * std::log(2.0 * std::numbers::pi) - 0.5 * ws.log_det_f() - 0.5 * quad;
  // P(N(-D e, D) <= 0) = P(N(0, D) <= D e).
  // With B = 0 we have D = Omega and e = 0, so the orthant term is C itself.
  const double log_orth = ws.b_is_zero ? ws.log_c : detail::log_orthant(ws.d_matrix * e, ws.d_matrix, rng);
  return -ws.log_c + log_orth + log_phi;
}

inline double log_density(const DensityWorkspace& ws, const ModelSpec& model, const Eigen::MatrixXd& z) {
  RngStream rng(0x64656e73ULL, 0);
  return log_density(ws, model, z, rng);
}

/// Density of X by direct integration of the normal kernel against a scalar
/// mixing density, f(Z) = int phi_{p,n}(Z - b v 1'; mu 1', Sigma (x) I) f_nu(v) dv.
/// Only for q = 1; used to cross-check the closed form.
inline double mixture_density_1d(const ModelSpec& model, const Eigen::MatrixXd& z,
                                 const std::function<double(double)>& nu_pdf, double lo, double hi) {
  if (model.q() != 1) throw InvalidDimension("mixture_density_1d: q must be 1");
  const auto& dec = model.decomposition();
  const Eigen::MatrixXd sigma_inv = dec.inverse();
  const double n = static_cast<double>(z.cols());
  const double p = static_cast<double>(z.rows());
  const double log_norm = -0.5 * n * p * std::log(2.0 * std::numbers::pi) - 0.5 * n * dec.log_det();
  const Eigen::VectorXd b = model.b().col(0);
  auto integrand = [&](double v) {
    const Eigen::MatrixXd r = (z.colwise() - model.mu()).colwise() - b * v;
    return std::exp(log_norm - 0.5 * (r.transpose() * sigma_inv * r).trace()) * nu_pdf(v);
  };
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(integrand, lo, hi, 15, 1e-13);
}

}  // namespace mvlmn
