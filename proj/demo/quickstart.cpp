// Library walk-through: draw l'S xbar and l'S^-1 xbar for a small model,
// standardize them, and evaluate a matrix log-density.
#include <cmath>
#include <cstdio>
#include <vector>

#include "mvlmn/asymptotics.hpp"
#include "mvlmn/density.hpp"
#include "mvlmn/harness.hpp"
#include "mvlmn/stats.hpp"
#include "mvlmn/stochastic_reps.hpp"

int main() {
  using namespace mvlmn;
  const std::size_t p = 40, n = 400, q = 3, reps = 20000;
  const double c = static_cast<double>(p) / n;

  const ModelSpec model = generate_random_model(p, q, 7);
  const Quadratics quad(model, Eigen::VectorXd::Ones(p));

  for (ProductKind kind : {ProductKind::CovTimesMean, ProductKind::PrecisionTimesMean}) {
    std::vector<double> t(reps);
    for (std::size_t i = 0; i < reps; ++i) {
      RngStream rng(2024, i);
      const ProductDraw d = sample_product(kind, model, quad, n, rng);
      const auto ap = asymptotic_params(quad, kind, c, d.nu_used);
      t[i] = std::sqrt(static_cast<double>(n)) * (d.value - ap.center) / std::sqrt(ap.variance);
    }
    const Moments m = moments(t);
    std::printf("%-10s mean %+.4f  var %.4f  KS vs N(0,1) %.4f\n",
                kind == ProductKind::CovTimesMean ? "l'S xbar" : "l'S^-1 xbar", m.mean, m.variance,
                ks_statistic(t));
  }

  // Log-density of a 3 x 5 sample under truncated-normal mixing.
  const ModelSpec small(Eigen::Vector3d(0.2, -0.1, 0.4), Eigen::Matrix3d::Identity() * 0.5,
                        Eigen::MatrixXd::Constant(3, 2, 0.3), NuDistribution::standard_truncated_normal(2));
  RngStream rng(1, 0);
  const Eigen::MatrixXd z = Eigen::MatrixXd::NullaryExpr(3, 5, [&] { return rng.normal(); });
  const auto ws = build_workspace(small, 5);
  std::printf("log f(Z) = %.10f\n", log_density(ws, small, z));
  return 0;
}
