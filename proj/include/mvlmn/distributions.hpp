#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <random>
#include <utility>
#include <variant>

#include <Eigen/Dense>

#include "mvlmn/errors.hpp"
#include "mvlmn/rng.hpp"

namespace mvlmn {

namespace detail {

inline Eigen::MatrixXd checked_cholesky(const Eigen::MatrixXd& m, const char* name) {
  if (m.rows() == 0 || m.rows() != m.cols()) {
    throw InvalidDimension(std::string(name) + " must be a non-empty square matrix");
  }
  const double scale = std::max(m.norm(), 1.0);
  if ((m - m.transpose()).norm() > 1e-12 * scale) {
    throw InvalidInput(std::string(name) + " is not symmetric");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success) {
    const double lmin = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(m, Eigen::EigenvaluesOnly)
                            .eigenvalues()(0);
    throw NotPositiveDefinite(std::string(name) + " is not positive definite", lmin);
  }
  return llt.matrixL();
}

}  // namespace detail

/// nu = |psi|, psi ~ N_q(0, omega).
struct TruncatedNormalAbs {
  Eigen::MatrixXd omega;
};

/// nu = m W + sqrt(W) sigma^{1/2} z with W ~ Gamma(shape, 1), z ~ N_q(0, I).
struct GeneralizedAsymmetricLaplace {
  Eigen::VectorXd m;
  Eigen::MatrixXd sigma;
  double shape;
};

struct Degenerate {
  Eigen::VectorXd value;
};

/// Law of the q-dimensional mixing vector nu. Validated on construction.
class NuDistribution {
 public:
  using Variant = std::variant<TruncatedNormalAbs, GeneralizedAsymmetricLaplace, Degenerate>;

  NuDistribution(TruncatedNormalAbs tn) : law_(std::move(tn)) {
    const auto& omega = std::get<TruncatedNormalAbs>(law_).omega;
    factor_ = detail::checked_cholesky(omega, "omega");
  }

  NuDistribution(GeneralizedAsymmetricLaplace gal) : law_(std::move(gal)) {
    const auto& g = std::get<GeneralizedAsymmetricLaplace>(law_);
    if (!(g.shape > 0.0) || !std::isfinite(g.shape)) {
      throw InvalidInput("GAL shape must be positive");
    }
    factor_ = detail::checked_cholesky(g.sigma, "GAL sigma");
    if (g.m.size() != g.sigma.rows()) {
      throw InvalidDimension("GAL m and sigma dimensions disagree");
    }
  }

  NuDistribution(Degenerate d) : law_(std::move(d)) {
    if (std::get<Degenerate>(law_).value.size() == 0) {
      throw InvalidDimension("degenerate nu must have at least one component");
    }
  }

  /// The settings used throughout the numerical study: TN with omega = I_q.
  static NuDistribution standard_truncated_normal(std::size_t q) {
    return TruncatedNormalAbs{Eigen::MatrixXd::Identity(q, q)};
  }

  /// GAL with m = 1_q, sigma = I_q, shape 10.
  static NuDistribution standard_gal(std::size_t q) {
    return GeneralizedAsymmetricLaplace{Eigen::VectorXd::Ones(q), Eigen::MatrixXd::Identity(q, q),
                                        10.0};
  }

  std::size_t dim() const {
    return std::visit(
        [](const auto& law) -> std::size_t {
          using T = std::decay_t<decltype(law)>;
          if constexpr (std::is_same_v<T, TruncatedNormalAbs>) {
            return static_cast<std::size_t>(law.omega.rows());
          } else if constexpr (std::is_same_v<T, GeneralizedAsymmetricLaplace>) {
            return static_cast<std::size_t>(law.m.size());
          } else {
            return static_cast<std::size_t>(law.value.size());
          }
        },
        law_);
  }

  const Variant& law() const noexcept { return law_; }

  bool is_truncated_normal() const noexcept {
    return std::holds_alternative<TruncatedNormalAbs>(law_);
  }

  /// Lower Cholesky factor of omega (TN) or sigma (GAL); empty for Degenerate.
  const Eigen::MatrixXd& factor() const noexcept { return factor_; }

 private:
  Variant law_;
  Eigen::MatrixXd factor_;
};

inline Eigen::VectorXd sample_std_normal_vec(std::size_t dim, RngStream& rng) {
  if (dim == 0) throw InvalidDimension("sample_std_normal_vec: dim must be >= 1");
  Eigen::VectorXd z(static_cast<Eigen::Index>(dim));
  for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = rng.normal();
  return z;
}

inline double sample_gamma(double shape, RngStream& rng) {
  return std::gamma_distribution<double>(shape, 1.0)(rng);
}

inline double sample_chi_squared(std::size_t k, RngStream& rng) {
  if (k == 0) throw InvalidDimension("sample_chi_squared: k must be >= 1");
  // Gamma draws can underflow to exactly 0 for k = 1; the law has no atom there.
  double x;
  do {
    x = 2.0 * sample_gamma(0.5 * static_cast<double>(k), rng);
  } while (x <= 0.0);
  return x;
}

/// chi^2_k(lambda) as a Poisson(lambda/2) mixture of central chi^2_{k+2J}.
/// Supports k = 0; returns exactly 0 when k = 0 and J = 0.
inline double sample_noncentral_chi_squared(std::size_t k, double lambda, RngStream& rng) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw InvalidInput("sample_noncentral_chi_squared: lambda must be finite and >= 0");
  }
  std::uint64_t j = 0;
  if (lambda > 0.0) j = std::poisson_distribution<std::uint64_t>(0.5 * lambda)(rng);
  const std::size_t dof = k + 2 * static_cast<std::size_t>(j);
  if (dof == 0) return 0.0;
  return sample_chi_squared(dof, rng);
}

/// [chi^2_{d1}(lambda)/d1] / [chi^2_{d2}/d2], numerator drawn first.
inline double sample_noncentral_f(std::size_t d1, std::size_t d2, double lambda, RngStream& rng) {
  if (d1 == 0 || d2 == 0) throw InvalidDimension("sample_noncentral_f: zero degrees of freedom");
  const double num = sample_noncentral_chi_squared(d1, lambda, rng) / static_cast<double>(d1);
  const double den = sample_chi_squared(d2, rng) / static_cast<double>(d2);
  return num / den;
}

inline Eigen::VectorXd sample_nu(const NuDistribution& dist, RngStream& rng) {
  return std::visit(
      [&](const auto& law) -> Eigen::VectorXd {
        using T = std::decay_t<decltype(law)>;
        if constexpr (std::is_same_v<T, TruncatedNormalAbs>) {
          const Eigen::VectorXd z = sample_std_normal_vec(dist.dim(), rng);
          return (dist.factor() * z).cwiseAbs();
        } else if constexpr (std::is_same_v<T, GeneralizedAsymmetricLaplace>) {
          const double w = sample_gamma(law.shape, rng);
          const Eigen::VectorXd z = sample_std_normal_vec(dist.dim(), rng);
          return law.m * w + std::sqrt(w) * (dist.factor() * z);
        } else {
          return law.value;
        }
      },
      dist.law());
}

/// E nu in closed form.
inline Eigen::VectorXd nu_mean(const NuDistribution& dist) {
  return std::visit(
      [&](const auto& law) -> Eigen::VectorXd {
        using T = std::decay_t<decltype(law)>;
        if constexpr (std::is_same_v<T, TruncatedNormalAbs>) {
          return (law.omega.diagonal() * (2.0 / std::numbers::pi)).cwiseSqrt();
        } else if constexpr (std::is_same_v<T, GeneralizedAsymmetricLaplace>) {
          return law.shape * law.m;
        } else {
          return law.value;
        }
      },
      dist.law());
}

/// Cov nu in closed form. For |psi| the cross moment uses
/// E|X||Y| = (2/pi) s_x s_y (sqrt(1 - r^2) + r asin r).
inline Eigen::MatrixXd nu_covariance(const NuDistribution& dist) {
  return std::visit(
      [&](const auto& law) -> Eigen::MatrixXd {
        using T = std::decay_t<decltype(law)>;
        const auto q = static_cast<Eigen::Index>(dist.dim());
        if constexpr (std::is_same_v<T, TruncatedNormalAbs>) {
          Eigen::MatrixXd cov(q, q);
          const Eigen::VectorXd sd = law.omega.diagonal().cwiseSqrt();
          for (Eigen::Index i = 0; i < q; ++i) {
            for (Eigen::Index j = 0; j < q; ++j) {
              const double r = std::clamp(law.omega(i, j) / (sd(i) * sd(j)), -1.0, 1.0);
              const double cross =
                  (2.0 / std::numbers::pi) * sd(i) * sd(j) * (std::sqrt(1.0 - r * r) + r * std::asin(r));
              cov(i, j) = cross - (2.0 / std::numbers::pi) * sd(i) * sd(j);
            }
          }
          return cov;
        } else if constexpr (std::is_same_v<T, GeneralizedAsymmetricLaplace>) {
          return law.shape * (law.sigma + law.m * law.m.transpose());
        } else {
          return Eigen::MatrixXd::Zero(q, q);
        }
      },
      dist.law());
}

}  // namespace mvlmn
