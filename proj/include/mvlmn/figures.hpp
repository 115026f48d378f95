#pragma once

#include <array>
#include <cstddef>
#include <optional>

#include "mvlmn/stochastic_reps.hpp"

namespace mvlmn {

enum class NuFamily { TruncatedNormal, Gal };

struct FigurePanel {
  int figure;
  char panel;
  std::size_t p;
  std::size_t n;
  NuFamily nu;
  ProductKind product;
  double c;
};

// One row per figure panel. Panels a/b use TN_q(0, I_q), c/d use
// GAL_q(1_q, I_q, 10); figures 1-4 show l'S xbar and 5-8 show l'S^{-1} xbar.
inline constexpr std::array<FigurePanel, 32> kFigureTable = {{
    {1, 'a', 50, 500, NuFamily::TruncatedNormal, ProductKind::CovTimesMean, 0.1},
    {1, 'b', 100, 1000, NuFamily::TruncatedNormal, ProductKind::CovTimesMean, 0.1},
    {1, 'c', 50, 500, NuFamily::Gal, ProductKind::CovTimesMean, 0.1},
    {1, 'd', 100, 1000, NuFamily::Gal, ProductKind::CovTimesMean, 0.1},
    {2, 'a', 250, 500, NuFamily::TruncatedNormal, ProductKind::CovTimesMean, 0.5},
    {2, 'b', 500, 1000, NuFamily::TruncatedNormal, ProductKind::CovTimesMean, 0.5},
    {2, 'c', 250, 500, NuFamily::Gal, ProductKind::CovTimesMean, 0.5},
    {2, 'd', 500, 1000, NuFamily::Gal, ProductKind::CovTimesMean, 0.5},
    {3, 'a', 400, 500, NuFamily::TruncatedNormal, ProductKind::CovTimesMean, 0.8},
    {3, 'b', 800, 1000, NuFamily::TruncatedNormal, ProductKind::CovTimesMean, 0.8},
    {3, 'c', 400, 500, NuFamily::Gal, ProductKind::CovTimesMean, 0.8},
    {3, 'd', 800, 1000, NuFamily::Gal, ProductKind::CovTimesMean, 0.8},
    {4, 'a', 475, 500, NuFamily::TruncatedNormal, ProductKind::CovTimesMean, 0.95},
    {4, 'b', 950, 1000, NuFamily::TruncatedNormal, ProductKind::CovTimesMean, 0.95},
    {4, 'c', 475, 500, NuFamily::Gal, ProductKind::CovTimesMean, 0.95},
    {4, 'd', 950, 1000, NuFamily::Gal, ProductKind::CovTimesMean, 0.95},
    {5, 'a', 50, 500, NuFamily::TruncatedNormal, ProductKind::PrecisionTimesMean, 0.1},
    {5, 'b', 100, 1000, NuFamily::TruncatedNormal, ProductKind::PrecisionTimesMean, 0.1},
    {5, 'c', 50, 500, NuFamily::Gal, ProductKind::PrecisionTimesMean, 0.1},
    {5, 'd', 100, 1000, NuFamily::Gal, ProductKind::PrecisionTimesMean, 0.1},
    {6, 'a', 250, 500, NuFamily::TruncatedNormal, ProductKind::PrecisionTimesMean, 0.5},
    {6, 'b', 500, 1000, NuFamily::TruncatedNormal, ProductKind::PrecisionTimesMean, 0.5},
    {6, 'c', 250, 500, NuFamily::Gal, ProductKind::PrecisionTimesMean, 0.5},
    {6, 'd', 500, 1000, NuFamily::Gal, ProductKind::PrecisionTimesMean, 0.5},
    {7, 'a', 400, 500, NuFamily::TruncatedNormal, ProductKind::PrecisionTimesMean, 0.8},
    {7, 'b', 800, 1000, NuFamily::TruncatedNormal, ProductKind::PrecisionTimesMean, 0.8},
    {7, 'c', 400, 500, NuFamily::Gal, ProductKind::PrecisionTimesMean, 0.8},
    {7, 'd', 800, 1000, NuFamily::Gal, ProductKind::PrecisionTimesMean, 0.8},
    {8, 'a', 475, 500, NuFamily::TruncatedNormal, ProductKind::PrecisionTimesMean, 0.95},
    {8, 'b', 950, 1000, NuFamily::TruncatedNormal, ProductKind::PrecisionTimesMean, 0.95},
    {8, 'c', 475, 500, NuFamily::Gal, ProductKind::PrecisionTimesMean, 0.95},
    {8, 'd', 950, 1000, NuFamily::Gal, ProductKind::PrecisionTimesMean, 0.95},
}};

inline std::optional<FigurePanel> find_figure_panel(int figure, char panel) {
  for (const auto& row : kFigureTable) {
    if (row.figure == figure && row.panel == panel) return row;
  }
  return std::nullopt;
}

inline NuDistribution make_nu(NuFamily family, std::size_t q) {
  return family == NuFamily::Gal ? NuDistribution::standard_gal(q)
                                 : NuDistribution::standard_truncated_normal(q);
}

}  // namespace mvlmn
