#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>

#include <Eigen/Dense>

#include "mvlmn/distributions.hpp"
#include "mvlmn/errors.hpp"
#include "mvlmn/model.hpp"
#include "mvlmn/rng.hpp"

namespace mvlmn {

enum class ProductKind {
  CovTimesMean,        // l^T S xbar
  PrecisionTimesMean,  // l^T S^{-1} xbar
};

struct ProductDraw {
  double value = 0.0;
  Eigen::VectorXd nu_used;
};

/// Scalar forms in mu_nu for one realization of nu.
struct NuForms {
  double l_sigma_mu = 0.0;    // l^T Sigma mu_nu
  double mu_sigma_mu = 0.0;   // mu_nu^T Sigma mu_nu
  double l_sinv_mu = 0.0;     // l^T Sigma^{-1} mu_nu
  double mu_sinv_mu = 0.0;    // mu_nu^T Sigma^{-1} mu_nu
  double delta2 = 0.0;        // mu_nu^T R_l mu_nu
};

/// Everything that depends on (model, l) only, expressed in the eigenbasis of
/// Sigma. Immutable after construction and safe to share across threads.
class Quadratics {
 public:
  Quadratics(const ModelSpec& model, const Eigen::VectorXd& l) {
    if (static_cast<std::size_t>(l.size()) != model.p()) {
      throw InvalidDimension("l must have p components");
    }
    const auto& dec = model.decomposition();
    lambda_ = dec.eigenvalues;
    l_rot_ = dec.eigenvectors.transpose() * l;
    mu_rot_ = dec.eigenvectors.transpose() * model.mu();
    b_rot_ = dec.eigenvectors.transpose() * model.b();
    q_ = model.q();

    const Eigen::ArrayXd lam = lambda_.array();
    const Eigen::ArrayXd lr = l_rot_.array();
    l_is_zero_ = (l.array() == 0.0).all();
    l_sigma_l_ = (lam * lr.square()).sum();
    l_sigma3_l_ = (lam.cube() * lr.square()).sum();
    l_sinv_l_ = (lr.square() / lam).sum();
    trace_sigma2_ = lam.square().sum();
    white_l_ = (lr / lam.sqrt()).matrix();
  }

  std::size_t p() const { return static_cast<std::size_t>(lambda_.size()); }
  std::size_t q() const { return q_; }
  bool l_is_zero() const { return l_is_zero_; }

  double l_sigma_l() const { return l_sigma_l_; }
  double l_sigma3_l() const { return l_sigma3_l_; }
  double l_sinv_l() const { return l_sinv_l_; }
  double trace_sigma2() const { return trace_sigma2_; }

  const Eigen::VectorXd& eigenvalues() const { return lambda_; }
  const Eigen::VectorXd& l_rotated() const { return l_rot_; }

  /// U^T mu_nu.
  Eigen::VectorXd mu_nu_rotated(const Eigen::VectorXd& nu) const {
    if (static_cast<std::size_t>(nu.size()) != q_) throw InvalidDimension("nu must have q components");
    return mu_rot_ + b_rot_ * nu;
  }

  NuForms forms(const Eigen::VectorXd& nu) const { return forms_rotated(mu_nu_rotated(nu)); }

  NuForms forms_rotated(const Eigen::VectorXd& m) const {
    const Eigen::ArrayXd lam = lambda_.array();
    const Eigen::ArrayXd ma = m.array();
    NuForms f;
    f.l_sigma_mu = (lam * l_rot_.array() * ma).sum();
    f.mu_sigma_mu = (lam * ma.square()).sum();
    f.l_sinv_mu = (l_rot_.array() * ma / lam).sum();
    f.mu_sinv_mu = (ma.square() / lam).sum();
    if (l_sinv_l_ > 0.0) {
      // R_l is the Sigma^{-1}-projection annihilating l; in whitened
      // coordinates delta^2 is the squared residual of projecting out l.
      const Eigen::VectorXd y = (ma / lam.sqrt()).matrix();
      const double coef = white_l_.dot(y) / white_l_.squaredNorm();
      f.delta2 = (y - coef * white_l_).squaredNorm();
    } else {
      f.delta2 = f.mu_sinv_mu;
    }
    return f;
  }

 private:
  Eigen::VectorXd lambda_;
  Eigen::VectorXd l_rot_;
  Eigen::VectorXd mu_rot_;
  Eigen::MatrixXd b_rot_;
  Eigen::VectorXd white_l_;
  std::size_t q_ = 0;
  bool l_is_zero_ = false;
  double l_sigma_l_ = 0.0;
  double l_sigma3_l_ = 0.0;
  double l_sinv_l_ = 0.0;
  double trace_sigma2_ = 0.0;
};

inline Quadratics precompute_quadratics(const ModelSpec& model, const Eigen::VectorXd& l) {
  return Quadratics(model, l);
}

namespace detail {

inline Eigen::VectorXd draw_or_fix_nu(const ModelSpec& model, RngStream& rng,
                                      const std::optional<Eigen::VectorXd>& fixed_nu) {
  if (fixed_nu) {
    if (static_cast<std::size_t>(fixed_nu->size()) != model.q()) {
      throw InvalidDimension("fixed_nu must have q components");
    }
    return *fixed_nu;
  }
  return sample_nu(model.nu(), rng);
}

}  // namespace detail

/// One exact draw of l^T S xbar through
///   (xi/(n-1)) l'Sigma xbar + sqrt(xi)/(n-1) (xbar'Sigma xbar l'Sigma l - (l'Sigma xbar)^2)^{1/2} z0
/// with xi ~ chi^2_{n-1}, xbar = mu_nu + sqrt_factor z / sqrt(n). Valid for any p.
/// Draw order: nu, z (p normals), xi, z0.
inline ProductDraw sample_cov_product(const ModelSpec& model, const Quadratics& quad, std::size_t n,
                                      RngStream& rng,
                                      const std::optional<Eigen::VectorXd>& fixed_nu = std::nullopt) {
  if (n < 2) throw InvalidDimension("sample_cov_product: n must be >= 2");
  ProductDraw d;
  d.nu_used = detail::draw_or_fix_nu(model, rng, fixed_nu);
  if (quad.l_is_zero()) return d;

  const Eigen::VectorXd m = quad.mu_nu_rotated(d.nu_used);
  const Eigen::VectorXd& lam = quad.eigenvalues();
  const Eigen::VectorXd& lr = quad.l_rotated();
  const double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(n));
  double l_sigma_x = 0.0;
  double x_sigma_x = 0.0;
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    const double w = m(i) + std::sqrt(lam(i)) * inv_sqrt_n * rng.normal();
    const double lw = lam(i) * w;
    l_sigma_x += lr(i) * lw;
    x_sigma_x += w * lw;
  }
  const double dof = static_cast<double>(n - 1);
  const double xi = sample_chi_squared(n - 1, rng);
  const double z0 = rng.normal();
  // Cauchy-Schwarz makes the bracket vanish identically when p = 1.
  const double bracket =
      quad.p() == 1 ? 0.0 : std::max(0.0, x_sigma_x * quad.l_sigma_l() - l_sigma_x * l_sigma_x);
  d.value = xi / dof * l_sigma_x + std::sqrt(xi) / dof * std::sqrt(bracket) * z0;
  return d;
}

inline ProductDraw sample_cov_product(const ModelSpec& model, const Eigen::VectorXd& l, std::size_t n,
                                      RngStream& rng,
                                      const std::optional<Eigen::VectorXd>& fixed_nu = std::nullopt) {
  return sample_cov_product(model, Quadratics(model, l), n, rng, fixed_nu);
}

/// One exact draw of l^T S^{-1} xbar through
///   xi~^{-1} (n-1) (l'Sigma^{-1}mu_nu + sqrt(l'Sigma^{-1}l) sqrt(1 + (p-1)/(n-p+1) eta) z0/sqrt(n))
/// with xi~ ~ chi^2_{n-p}, eta ~ F_{p-1,n-p+1}(n delta^2(nu)). Requires p < n - 1.
/// Draw order: nu, xi~, eta (p >= 2 only), z0.
inline ProductDraw sample_precision_product(const ModelSpec& model, const Quadratics& quad,
                                            std::size_t n, RngStream& rng,
                                            const std::optional<Eigen::VectorXd>& fixed_nu = std::nullopt) {
  const std::size_t p = quad.p();
  if (p + 1 >= n) throw RegimeError("sample_precision_product: requires p < n - 1");
  if (quad.l_is_zero()) throw ZeroVector("sample_precision_product: l must be non-zero");
  ProductDraw d;
  d.nu_used = detail::draw_or_fix_nu(model, rng, fixed_nu);
  const NuForms f = quad.forms(d.nu_used);
  const double xi = sample_chi_squared(n - p, rng);
  double spread = 1.0;
  if (p >= 2) {
    const double eta = sample_noncentral_f(p - 1, n - p + 1, static_cast<double>(n) * f.delta2, rng);
    spread += static_cast<double>(p - 1) / static_cast<double>(n - p + 1) * eta;
  }
  const double z0 = rng.normal();
  d.value = static_cast<double>(n - 1) / xi *
            (f.l_sinv_mu + std::sqrt(quad.l_sinv_l()) * std::sqrt(spread) * z0 /
                               std::sqrt(static_cast<double>(n)));
  return d;
}

inline ProductDraw sample_precision_product(const ModelSpec& model, const Eigen::VectorXd& l,
                                            std::size_t n, RngStream& rng,
                                            const std::optional<Eigen::VectorXd>& fixed_nu = std::nullopt) {
  return sample_precision_product(model, Quadratics(model, l), n, rng, fixed_nu);
}

inline ProductDraw sample_product(ProductKind kind, const ModelSpec& model, const Quadratics& quad,
                                  std::size_t n, RngStream& rng,
                                  const std::optional<Eigen::VectorXd>& fixed_nu = std::nullopt) {
  return kind == ProductKind::CovTimesMean ? sample_cov_product(model, quad, n, rng, fixed_nu)
                                           : sample_precision_product(model, quad, n, rng, fixed_nu);
}

/// Brute-force reference: simulate the whole p x n matrix and evaluate the
/// product from xbar and S directly.
inline ProductDraw oracle_product(ProductKind kind, const ModelSpec& model, const Eigen::VectorXd& l,
                                  std::size_t n, RngStream& rng) {
  const DataDraw data = sample_data_matrix(model, n, rng);
  const SampleMoments mom = sample_mean_and_cov(data.x);
  ProductDraw d;
  d.nu_used = data.nu;
  if (kind == ProductKind::CovTimesMean) {
    d.value = l.dot(mom.s_matrix * mom.xbar);
  } else {
    if (model.p() + 1 >= n) throw RegimeError("oracle_product: S is singular for p >= n - 1");
    d.value = l.dot(mom.s_matrix.ldlt().solve(mom.xbar));
  }
  return d;
}

}  // namespace mvlmn
