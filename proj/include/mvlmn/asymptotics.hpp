#pragma once

#include <cassert>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "mvlmn/distributions.hpp"
#include "mvlmn/errors.hpp"
#include "mvlmn/model.hpp"
#include "mvlmn/stochastic_reps.hpp"

namespace mvlmn {

/// How the c-term of sigma^2_nu is scaled. The CLT for l^T S xbar carries
/// c tr(Sigma^2)/p; FrobeniusCompat uses c ||Sigma||_F^2 instead, which is the
/// variant printed alongside the original simulation recipe.
enum class VarianceConvention { TraceOverP, FrobeniusCompat };

struct AsymptoticParams {
  ProductKind kind = ProductKind::CovTimesMean;
  double c = 0.0;
  double center = 0.0;
  double variance = 0.0;
  Eigen::VectorXd nu_value;
};

struct MeanMixingParams {
  Eigen::VectorXd omega_mean;
  Eigen::MatrixXd omega_cov;
  double gamma = 0.0;
  double sigma2 = 0.0;
  std::optional<double> sigma2_tilde;  // only for c < 1
};

/// sigma^2_nu = [mu_nu'Sigma mu_nu + c tr(Sigma^2)/p] l'Sigma l + (l'Sigma mu_nu)^2 + l'Sigma^3 l.
inline double sigma2_nu(const Quadratics& quad, double c, const NuForms& f,
                        VarianceConvention conv = VarianceConvention::TraceOverP) {
  if (!(c >= 0.0)) throw InvalidInput("sigma2_nu: c must be >= 0");
  const double spread = conv == VarianceConvention::TraceOverP
                            ? c * quad.trace_sigma2() / static_cast<double>(quad.p())
                            : c * quad.trace_sigma2();
  return (f.mu_sigma_mu + spread) * quad.l_sigma_l() + f.l_sigma_mu * f.l_sigma_mu + quad.l_sigma3_l();
}

inline double sigma2_nu(const ModelSpec& model, const Eigen::VectorXd& l, double c,
                        const Eigen::VectorXd& nu_value,
                        VarianceConvention conv = VarianceConvention::TraceOverP) {
  const Quadratics quad(model, l);
  return sigma2_nu(quad, c, quad.forms(nu_value), conv);
}

/// Both algebraic forms of sigma~^2_nu (they are equal since
/// delta^2 = mu'Sigma^{-1}mu - (l'Sigma^{-1}mu)^2 / l'Sigma^{-1}l).
struct PrecisionVarianceForms {
  double statement;  // ((l'S^-1 mu)^2 + l'S^-1 l (1 + mu'S^-1 mu)) / (1-c)^3
  double proof;      // (2 (l'S^-1 mu)^2 + l'S^-1 l (1 + delta^2)) / (1-c)^3
};

inline PrecisionVarianceForms sigma2_tilde_forms(const Quadratics& quad, double c, const NuForms& f) {
  if (!(c >= 0.0) || !(c < 1.0)) throw RegimeError("sigma2_tilde_nu: requires 0 <= c < 1");
  if (quad.l_is_zero()) throw ZeroVector("sigma2_tilde_nu: l must be non-zero");
  const double scale = 1.0 / std::pow(1.0 - c, 3);
  const double a = f.l_sinv_mu;
  const double b = quad.l_sinv_l();
  return {scale * (a * a + b * (1.0 + f.mu_sinv_mu)), scale * (2.0 * a * a + b * (1.0 + f.delta2))};
}

inline double sigma2_tilde_nu(const Quadratics& quad, double c, const NuForms& f) {
  const auto forms = sigma2_tilde_forms(quad, c, f);
  assert(std::abs(forms.statement - forms.proof) <= 1e-8 * forms.statement);
  return forms.proof;
}

inline double sigma2_tilde_nu(const ModelSpec& model, const Eigen::VectorXd& l, double c,
                              const Eigen::VectorXd& nu_value) {
  const Quadratics quad(model, l);
  return sigma2_tilde_nu(quad, c, quad.forms(nu_value));
}

inline AsymptoticParams asymptotic_params(const Quadratics& quad, ProductKind kind, double c,
                                          const Eigen::VectorXd& nu_value,
                                          VarianceConvention conv = VarianceConvention::TraceOverP) {
  const NuForms f = quad.forms(nu_value);
  AsymptoticParams ap;
  ap.kind = kind;
  ap.c = c;
  ap.nu_value = nu_value;
  if (kind == ProductKind::CovTimesMean) {
    ap.center = f.l_sigma_mu;
    ap.variance = sigma2_nu(quad, c, f, conv);
  } else {
    ap.center = f.l_sinv_mu / (1.0 - c);
    ap.variance = sigma2_tilde_nu(quad, c, f);
  }
  return ap;
}

/// Limits obtained by replacing nu with its mean omega.
inline MeanMixingParams mean_mixing_params(const ModelSpec& model, const Eigen::VectorXd& l, double c,
                                        const Eigen::VectorXd& omega_mean, std::size_t n) {
  if (n == 0) throw InvalidDimension("mean_mixing_params: n must be >= 1");
  const Quadratics quad(model, l);
  const NuForms f = quad.forms(omega_mean);
  MeanMixingParams cp;
  cp.omega_mean = omega_mean;
  cp.omega_cov = nu_covariance(model.nu());
  cp.gamma = static_cast<double>(model.q()) / static_cast<double>(n);
  cp.sigma2 = sigma2_nu(quad, c, f);
  if (c < 1.0 && !quad.l_is_zero()) cp.sigma2_tilde = sigma2_tilde_nu(quad, c, f);
  return cp;
}

/// sqrt(n) (value - center) / sqrt(variance) for each draw, using the nu the
/// draw was generated with.
inline std::vector<double> standardize(std::span<const ProductDraw> draws, const Quadratics& quad,
                                       double c, std::size_t n, ProductKind kind,
                                       VarianceConvention conv = VarianceConvention::TraceOverP) {
  if (draws.empty()) throw InvalidInput("standardize: no draws");
  if (quad.l_is_zero()) throw ZeroVector("standardize: l = 0 gives zero asymptotic variance");
  std::vector<double> out;
  out.reserve(draws.size());
  const double root_n = std::sqrt(static_cast<double>(n));
  for (const auto& d : draws) {
    const AsymptoticParams ap = asymptotic_params(quad, kind, c, d.nu_used, conv);
    out.push_back(root_n * (d.value - ap.center) / std::sqrt(ap.variance));
  }
  return out;
}

inline std::vector<double> standardize(std::span<const ProductDraw> draws, const ModelSpec& model,
                                       const Eigen::VectorXd& l, double c, std::size_t n,
                                       ProductKind kind,
                                       VarianceConvention conv = VarianceConvention::TraceOverP) {
  return standardize(draws, Quadratics(model, l), c, n, kind, conv);
}

}  // namespace mvlmn
