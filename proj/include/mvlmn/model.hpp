#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <memory>
#include <numeric>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "mvlmn/distributions.hpp"
#include "mvlmn/errors.hpp"
#include "mvlmn/rng.hpp"

namespace mvlmn {

/// Spectral decomposition of the population covariance.
/// sqrt_factor = U diag(sqrt(lambda)), so sqrt_factor * sqrt_factor^T = Sigma.
struct SigmaDecomposition {
  Eigen::VectorXd eigenvalues;  // ascending
  Eigen::MatrixXd eigenvectors;
  Eigen::MatrixXd sqrt_factor;
  bool inverse_available = false;

  Eigen::Index dim() const { return eigenvalues.size(); }

  Eigen::MatrixXd inverse() const {
    return eigenvectors * eigenvalues.cwiseInverse().asDiagonal() * eigenvectors.transpose();
  }
  double log_det() const { return eigenvalues.array().log().sum(); }
};

inline SigmaDecomposition decompose_sigma(const Eigen::MatrixXd& sigma) {
  const Eigen::Index p = sigma.rows();
  if (p == 0 || sigma.cols() != p) throw InvalidDimension("sigma must be a non-empty square matrix");
  if (!sigma.allFinite()) throw InvalidInput("sigma has non-finite entries");
  const double norm = sigma.norm();
  if ((sigma - sigma.transpose()).norm() > 1e-12 * norm) {
    throw InvalidInput("sigma is not symmetric");
  }

  SigmaDecomposition out;
  const Eigen::VectorXd diag = sigma.diagonal();
  const bool is_diagonal = (sigma - Eigen::MatrixXd(diag.asDiagonal())).cwiseAbs().maxCoeff() == 0.0;
  if (is_diagonal) {
    // Skips the O(p^3) solver for the diagonal covariances of the numerical study.
    std::vector<Eigen::Index> order(static_cast<std::size_t>(p));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](Eigen::Index a, Eigen::Index b) { return diag(a) < diag(b); });
    out.eigenvalues.resize(p);
    out.eigenvectors = Eigen::MatrixXd::Zero(p, p);
    for (Eigen::Index k = 0; k < p; ++k) {
      out.eigenvalues(k) = diag(order[static_cast<std::size_t>(k)]);
      out.eigenvectors(order[static_cast<std::size_t>(k)], k) = 1.0;
    }
  } else {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sigma);
    if (solver.info() != Eigen::Success) throw InvalidInput("eigendecomposition of sigma failed");
    out.eigenvalues = solver.eigenvalues();
    out.eigenvectors = solver.eigenvectors();
  }
  if (!(out.eigenvalues(0) > 0.0)) {
    throw NotPositiveDefinite("sigma is not positive definite", out.eigenvalues(0));
  }
  out.sqrt_factor = out.eigenvectors * out.eigenvalues.cwiseSqrt().asDiagonal();
  out.inverse_available = true;
  return out;
}

/// Parameters (mu, Sigma, B, law of nu) of the matrix-variate location
/// mixture of normals X = Y + B nu 1_n^T. Immutable; the decomposition of
/// Sigma is computed once and shared between copies.
class ModelSpec {
 public:
  ModelSpec(Eigen::VectorXd mu, Eigen::MatrixXd sigma, Eigen::MatrixXd b, NuDistribution nu)
      : mu_(std::move(mu)), sigma_(std::move(sigma)), b_(std::move(b)), nu_(std::move(nu)) {
    const Eigen::Index p = mu_.size();
    if (p == 0) throw InvalidDimension("mu must have at least one component");
    if (sigma_.rows() != p || sigma_.cols() != p) throw InvalidDimension("sigma must be p x p");
    if (b_.rows() != p) throw InvalidDimension("B must have p rows");
    if (static_cast<std::size_t>(b_.cols()) != nu_.dim()) {
      throw InvalidDimension("B must have as many columns as nu has components");
    }
    decomposition_ = std::make_shared<const SigmaDecomposition>(decompose_sigma(sigma_));
  }

  const Eigen::VectorXd& mu() const noexcept { return mu_; }
  const Eigen::MatrixXd& sigma() const noexcept { return sigma_; }
  const Eigen::MatrixXd& b() const noexcept { return b_; }
  const NuDistribution& nu() const noexcept { return nu_; }
  const SigmaDecomposition& decomposition() const noexcept { return *decomposition_; }
  std::size_t p() const noexcept { return static_cast<std::size_t>(mu_.size()); }
  std::size_t q() const noexcept { return static_cast<std::size_t>(b_.cols()); }

 private:
  Eigen::VectorXd mu_;
  Eigen::MatrixXd sigma_;
  Eigen::MatrixXd b_;
  NuDistribution nu_;
  std::shared_ptr<const SigmaDecomposition> decomposition_;
};

/// Quantities bounded by the spectral and eigenvector assumptions.
struct AssumptionReport {
  double lambda_min = 0.0;
  double lambda_max = 0.0;
  double max_abs_u_mu = 0.0;  // max_i |u_i^T mu|
  double max_abs_u_b = 0.0;   // max_{i,j} |u_i^T b_j|
  double max_abs_u_l = 0.0;   // max_i |u_i^T l|
};

inline AssumptionReport verify_assumptions(const ModelSpec& model, const Eigen::VectorXd& l) {
  if (static_cast<std::size_t>(l.size()) != model.p()) {
    throw InvalidDimension("verify_assumptions: l must have p components");
  }
  const auto& dec = model.decomposition();
  const Eigen::MatrixXd& u = dec.eigenvectors;
  AssumptionReport r;
  r.lambda_min = dec.eigenvalues(0);
  r.lambda_max = dec.eigenvalues(dec.dim() - 1);
  r.max_abs_u_mu = (u.transpose() * model.mu()).cwiseAbs().maxCoeff();
  r.max_abs_u_b = model.q() == 0 ? 0.0 : (u.transpose() * model.b()).cwiseAbs().maxCoeff();
  r.max_abs_u_l = (u.transpose() * l).cwiseAbs().maxCoeff();
  return r;
}

/// Quantities bounded by the extra assumptions behind the unconditional CLTs:
/// max_i |u_i^T B omega| and the spectral norm of B Omega B^T.
struct MixingAssumptionReport {
  double max_abs_u_b_omega = 0.0;
  double spectral_norm_b_omega_bt = 0.0;
};

inline MixingAssumptionReport verify_mixing_assumptions(const ModelSpec& model,
                                                        const Eigen::VectorXd& omega_mean,
                                                        const Eigen::MatrixXd& omega_cov) {
  if (static_cast<std::size_t>(omega_mean.size()) != model.q() ||
      static_cast<std::size_t>(omega_cov.rows()) != model.q() || omega_cov.cols() != omega_cov.rows()) {
    throw InvalidDimension("verify_mixing_assumptions: omega dimensions must equal q");
  }
  const Eigen::MatrixXd& u = model.decomposition().eigenvectors;
  MixingAssumptionReport r;
  r.max_abs_u_b_omega = (u.transpose() * (model.b() * omega_mean)).cwiseAbs().maxCoeff();
  const Eigen::MatrixXd bob = model.b() * omega_cov * model.b().transpose();
  r.spectral_norm_b_omega_bt =
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(bob, Eigen::EigenvaluesOnly).eigenvalues().cwiseAbs().maxCoeff();
  return r;
}

/// mu_nu = mu + B nu.
inline Eigen::VectorXd mu_nu(const ModelSpec& model, const Eigen::VectorXd& nu_value) {
  if (static_cast<std::size_t>(nu_value.size()) != model.q()) {
    throw InvalidDimension("mu_nu: nu must have q components");
  }
  return model.mu() + model.b() * nu_value;
}

struct DataDraw {
  Eigen::MatrixXd x;  // p x n
  Eigen::VectorXd nu;
};

/// Draws one nu, then the columns x_i = mu + B nu + sqrt_factor z_i.
inline DataDraw sample_data_matrix(const ModelSpec& model, std::size_t n, RngStream& rng) {
  if (n < 2) throw InvalidDimension("sample_data_matrix: n must be >= 2");
  DataDraw out;
  out.nu = sample_nu(model.nu(), rng);
  const Eigen::VectorXd center = mu_nu(model, out.nu);
  const auto p = static_cast<Eigen::Index>(model.p());
  const auto cols = static_cast<Eigen::Index>(n);
  Eigen::MatrixXd z(p, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < p; ++i) z(i, j) = rng.normal();
  out.x = model.decomposition().sqrt_factor * z;
  out.x.colwise() += center;
  return out;
}

struct SampleMoments {
  Eigen::VectorXd xbar;
  Eigen::MatrixXd s_matrix;
  std::size_t n_used = 0;
};

/// xbar = X 1_n / n and S = X V X^T / (n - 1), V the centering matrix.
inline SampleMoments sample_mean_and_cov(const Eigen::MatrixXd& x) {
  if (x.cols() < 2) throw InvalidDimension("sample_mean_and_cov: n must be >= 2");
  SampleMoments m;
  m.n_used = static_cast<std::size_t>(x.cols());
  m.xbar = x.rowwise().mean();
  const Eigen::MatrixXd centered = x.colwise() - m.xbar;
  m.s_matrix = centered * centered.transpose() / static_cast<double>(x.cols() - 1);
  m.s_matrix = 0.5 * (m.s_matrix + m.s_matrix.transpose()).eval();
  return m;
}

}  // namespace mvlmn
