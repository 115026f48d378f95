#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <iostream>
#include <optional>
#include <span>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "mvlmn/asymptotics.hpp"
#include "mvlmn/distributions.hpp"
#include "mvlmn/errors.hpp"
#include "mvlmn/kde.hpp"
#include "mvlmn/model.hpp"
#include "mvlmn/rng.hpp"
#include "mvlmn/stats.hpp"
#include "mvlmn/stochastic_reps.hpp"

namespace mvlmn {

struct ExperimentConfig {
  std::size_t p = 50;
  std::size_t n = 500;
  std::size_t q = 10;
  double c = 0.1;
  std::size_t n_reps = 100000;
  ProductKind product = ProductKind::CovTimesMean;
  NuDistribution nu = NuDistribution::standard_truncated_normal(10);
  std::uint64_t master_seed = 1;
  std::uint64_t model_seed = 20170101;
  KdeGrid kde_grid;
  std::vector<double> bandwidth_grid;  // empty: default_bandwidth_grid of the sample
  VarianceConvention convention = VarianceConvention::TraceOverP;

  void validate() const {
    if (p == 0 || n < 2 || q == 0) throw InvalidDimension("experiment: need p, q >= 1 and n >= 2");
    if (nu.dim() != q) throw InvalidDimension("experiment: nu dimension differs from q");
    if (n_reps < 100) throw InvalidInput("experiment: n_reps must be >= 100");
    if (product == ProductKind::PrecisionTimesMean) {
      if (p + 1 >= n) throw RegimeError("experiment: the precision product requires p < n - 1");
      if (!(c < 1.0)) throw RegimeError("experiment: the precision product requires c < 1");
    }
    if (!(c >= 0.0)) throw InvalidInput("experiment: c must be >= 0");
    const double ratio = static_cast<double>(p) / static_cast<double>(n);
    if (std::abs(ratio - c) > 1.0 / std::sqrt(static_cast<double>(n))) {
      throw InvalidInput("experiment: c must satisfy |p/n - c| <= n^{-1/2}");
    }
    for (double h : bandwidth_grid) {
      if (!(h > 0.0)) throw InvalidInput("experiment: bandwidths must be positive");
    }
  }
};

struct SampleSet {
  std::vector<double> standardized;
  ExperimentConfig config;
};

struct GofReport {
  double bandwidth = 0.0;
  std::vector<KdePoint> kde;
  double ks_statistic = 0.0;
  double mean = 0.0;
  double variance = 0.0;
  double skewness = 0.0;
};

/// Random model of the numerical study: mu_i ~ U[-1,1], B_ij ~ U[0,1] and
/// Sigma = diag(U[0,1]). Diagonal entries below 1e-6 are redrawn so the
/// smallest eigenvalue stays away from zero. Deterministic in model_seed.
inline ModelSpec generate_random_model(std::size_t p, std::size_t q, std::uint64_t model_seed,
                                      std::optional<NuDistribution> nu = std::nullopt) {
  if (p == 0 || q == 0) throw InvalidDimension("generate_random_model: p and q must be >= 1");
  RngStream rng(model_seed, 0);
  std::uniform_real_distribution<double> sym(-1.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto pp = static_cast<Eigen::Index>(p);
  const auto qq = static_cast<Eigen::Index>(q);
  Eigen::VectorXd mu(pp);
  for (Eigen::Index i = 0; i < pp; ++i) mu(i) = sym(rng);
  Eigen::MatrixXd b(pp, qq);
  for (Eigen::Index i = 0; i < pp; ++i)
    for (Eigen::Index j = 0; j < qq; ++j) b(i, j) = unit(rng);
  Eigen::VectorXd diag(pp);
  std::size_t redrawn = 0;
  for (Eigen::Index i = 0; i < pp; ++i) {
    double v = unit(rng);
    while (v < 1e-6) {
      ++redrawn;
      v = unit(rng);
    }
    diag(i) = v;
  }
  if (redrawn > 0) {
    std::clog << "generate_random_model: redrew " << redrawn << " covariance entries below 1e-6\n";
  }
  return ModelSpec(std::move(mu), Eigen::MatrixXd(diag.asDiagonal()), std::move(b),
                   nu ? std::move(*nu) : NuDistribution::standard_truncated_normal(q));
}

/// Generic parallel loop over replicate indices; body(i) must only touch slot i.
template <typename Body>
void parallel_for(std::size_t count, unsigned threads, Body&& body) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(count, 1)));
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::vector<std::jthread> pool;
  pool.reserve(threads);
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      const std::size_t lo = count * t / threads;
      const std::size_t hi = count * (t + 1) / threads;
      for (std::size_t i = lo; i < hi; ++i) body(i);
    });
  }
}

/// Runs the simulation with l = 1_p: each replicate i draws on stream
/// (master_seed, i), samples the product through its stochastic
/// representation and standardizes it with the conditional asymptotic
/// center and variance. Output does not depend on `threads` (0 = all cores).
inline SampleSet run_experiment(const ExperimentConfig& cfg, unsigned threads = 0) {
  cfg.validate();
  const ModelSpec model = generate_random_model(cfg.p, cfg.q, cfg.model_seed, cfg.nu);
  const Eigen::VectorXd l = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(cfg.p));
  const Quadratics quad(model, l);
  const double root_n = std::sqrt(static_cast<double>(cfg.n));

  SampleSet out;
  out.config = cfg;
  out.standardized.resize(cfg.n_reps);
  parallel_for(cfg.n_reps, threads, [&](std::size_t i) {
    RngStream rng(cfg.master_seed, i);
    const ProductDraw d = sample_product(cfg.product, model, quad, cfg.n, rng);
    const AsymptoticParams ap = asymptotic_params(quad, cfg.product, cfg.c, d.nu_used, cfg.convention);
    out.standardized[i] = root_n * (d.value - ap.center) / std::sqrt(ap.variance);
  });
  for (double v : out.standardized) {
    if (!std::isfinite(v)) throw Error("run_experiment: non-finite standardized value");
  }
  return out;
}

/// Goodness-of-fit summary against N(0,1): LSCV bandwidth, Epanechnikov KDE
/// on the grid, KS distance and moments.
inline GofReport summarize(std::span<const double> samples, const KdeGrid& grid,
                           std::span<const double> bandwidth_grid = {}) {
  if (samples.size() < 3) throw InvalidInput("summarize: need at least three samples");
  GofReport r;
  const std::vector<double> bw =
      bandwidth_grid.empty() ? default_bandwidth_grid(samples)
                             : std::vector<double>(bandwidth_grid.begin(), bandwidth_grid.end());
  r.bandwidth = lscv_bandwidth(samples, bw);
  const auto xs = grid.values();
  r.kde = epanechnikov_kde(samples, r.bandwidth, xs);
  r.ks_statistic = ks_statistic(samples);
  const Moments m = moments(samples);
  r.mean = m.mean;
  r.variance = m.variance;
  r.skewness = m.skewness;
  return r;
}

inline GofReport summarize(const SampleSet& set) {
  return summarize(set.standardized, set.config.kde_grid, set.config.bandwidth_grid);
}

/// Trapezoid integral of a KDE over its grid.
inline double trapezoid(std::span<const KdePoint> kde) {
  double acc = 0.0;
  for (std::size_t i = 1; i < kde.size(); ++i) {
    acc += 0.5 * (kde[i].density + kde[i - 1].density) * (kde[i].x - kde[i - 1].x);
  }
  return acc;
}

}  // namespace mvlmn
