#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "mvlmn/errors.hpp"
#include "mvlmn/stats.hpp"

namespace mvlmn {

/// K(u) = 0.75 (1 - u^2) on |u| <= 1.
inline double epanechnikov(double u) { return std::abs(u) <= 1.0 ? 0.75 * (1.0 - u * u) : 0.0; }

/// (K * K)(t) = (3/160) (2 - |t|)^3 (t^2 + 6|t| + 4) on |t| <= 2.
inline double epanechnikov_self_convolution(double t) {
  const double a = std::abs(t);
  if (a > 2.0) return 0.0;
  return 3.0 / 160.0 * (32.0 - 40.0 * a * a + 20.0 * a * a * a - a * a * a * a * a);
}

struct KdePoint {
  double x;
  double density;
};

struct KdeGrid {
  double lo = -4.0;
  double hi = 4.0;
  std::size_t points = 201;

  std::vector<double> values() const {
    if (points < 2 || !(hi > lo)) throw InvalidInput("KDE grid needs hi > lo and >= 2 points");
    std::vector<double> g(points);
    for (std::size_t i = 0; i < points; ++i) {
      g[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
    }
    return g;
  }
};

namespace detail {

inline std::vector<double> sorted_copy(std::span<const double> x) {
  std::vector<double> s(x.begin(), x.end());
  std::sort(s.begin(), s.end());
  return s;
}

inline double kde_at_sorted(const std::vector<double>& s, double h, double x) {
  auto lo = std::lower_bound(s.begin(), s.end(), x - h);
  auto hi = std::upper_bound(lo, s.end(), x + h);
  double acc = 0.0;
  for (auto it = lo; it != hi; ++it) acc += epanechnikov((x - *it) / h);
  return acc / (static_cast<double>(s.size()) * h);
}

}  // namespace detail

/// f(x) = 1/(N h) sum_i K((x - s_i)/h) on each grid point.
inline std::vector<KdePoint> epanechnikov_kde(std::span<const double> samples, double bandwidth,
                                              std::span<const double> grid) {
  if (samples.empty()) throw InvalidInput("epanechnikov_kde: no samples");
  if (!(bandwidth > 0.0)) throw InvalidInput("epanechnikov_kde: bandwidth must be positive");
  const auto s = detail::sorted_copy(samples);
  std::vector<KdePoint> out;
  out.reserve(grid.size());
  for (double x : grid) out.push_back({x, detail::kde_at_sorted(s, bandwidth, x)});
  return out;
}

/// Least-squares cross-validation score
///   LSCV(h) = int f_h^2 - (2/N) sum_i f_{h,-i}(s_i)
/// evaluated exactly. Pair sums over the compact kernel support are
/// accumulated as polynomial moments of the gaps, using prefix sums anchored
/// at the start of each block of width h; the cost is O(N) after sorting.
inline double lscv_score_sorted(const std::vector<double>& s, double h) {
  const std::size_t n = s.size();
  if (n < 2) throw InvalidInput("lscv: need at least two samples");
  if (!(h > 0.0)) throw InvalidInput("lscv: bandwidth must be positive");

  // Upper window ends for gaps <= h and <= 2h (exclusive indices).
  std::vector<std::size_t> end1(n), end2(n);
  {
    std::size_t e1 = 0, e2 = 0;
    for (std::size_t i = 0; i < n; ++i) {
      e1 = std::max(e1, i + 1);
      e2 = std::max(e2, i + 1);
      while (e1 < n && s[e1] - s[i] <= h) ++e1;
      while (e2 < n && s[e2] - s[i] <= 2.0 * h) ++e2;
      end1[i] = e1;
      end2[i] = e2;
    }
  }

  constexpr int kPowers = 6;
  static constexpr std::array<std::array<double, kPowers>, kPowers> binom = {{
      {1, 0, 0, 0, 0, 0},
      {1, 1, 0, 0, 0, 0},
      {1, 2, 1, 0, 0, 0},
      {1, 3, 3, 1, 0, 0},
      {1, 4, 6, 4, 1, 0},
      {1, 5, 10, 10, 5, 1},
  }};

  double pair_k = 0.0;   // sum_{i<j} K(gap/h)
  double pair_kk = 0.0;  // sum_{i<j} (K*K)(gap/h)
  std::vector<std::array<double, kPowers>> prefix;

  std::size_t start = 0;
  while (start < n) {
    std::size_t stop = start;
    while (stop < n && s[stop] - s[start] <= h) ++stop;
    const double anchor = s[start];
    const std::size_t region_end = end2[stop - 1];
    const std::size_t len = region_end - start;
    prefix.assign(len + 1, {});
    for (std::size_t t = 0; t < len; ++t) {
      const double u = (s[start + t] - anchor) / h;
      double pw = 1.0;
      for (int m = 0; m < kPowers; ++m) {
        prefix[t + 1][m] = prefix[t][m] + pw;
        pw *= u;
      }
    }
    for (std::size_t i = start; i < stop; ++i) {
      const double ui = (s[i] - anchor) / h;
      auto gap_moments = [&](std::size_t end) {
        std::array<double, kPowers> raw{};
        for (int m = 0; m < kPowers; ++m) raw[m] = prefix[end - start][m] - prefix[i + 1 - start][m];
        std::array<double, kPowers> out{};
        for (int k = 0; k < kPowers; ++k) {
          double acc = 0.0;
          double neg = 1.0;  // (-ui)^(k-m), built from m = k downwards
          for (int m = k; m >= 0; --m) {
            acc += binom[k][m] * neg * raw[m];
            neg *= -ui;
          }
          out[k] = acc;
        }
        return out;
      };
      const auto g1 = gap_moments(end1[i]);
      pair_k += 0.75 * (g1[0] - g1[2]);
      const auto g2 = gap_moments(end2[i]);
      pair_kk += 3.0 / 160.0 * (32.0 * g2[0] - 40.0 * g2[2] + 20.0 * g2[3] - g2[5]);
    }
    start = stop;
  }

  const double nn = static_cast<double>(n);
  const double integral_sq = (0.6 * nn + 2.0 * pair_kk) / (nn * nn * h);
  const double loo = 2.0 * pair_k / (nn * (nn - 1.0) * h);
  return integral_sq - 2.0 * loo;
}

inline double lscv_score(std::span<const double> samples, double h) {
  return lscv_score_sorted(detail::sorted_copy(samples), h);
}

/// Log-spaced grid of `count` bandwidths spanning [0.05, 2] times the
/// Epanechnikov normal-reference bandwidth 2.34 sd N^{-1/5}.
inline std::vector<double> default_bandwidth_grid(std::span<const double> samples, std::size_t count = 30) {
  const auto m = moments(samples);
  const double sd = std::sqrt(m.variance);
  if (!(sd > 0.0)) throw InvalidInput("default_bandwidth_grid: samples have zero spread");
  const double reference = 2.34 * sd * std::pow(static_cast<double>(samples.size()), -0.2);
  const double lo = std::log(0.05 * reference);
  const double hi = std::log(2.0 * reference);
  std::vector<double> grid(count);
  for (std::size_t i = 0; i < count; ++i) {
    const double t = count == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(count - 1);
    grid[i] = std::exp(lo + t * (hi - lo));
  }
  return grid;
}

/// Grid bandwidth minimizing the LSCV score (first minimizer on ties).
inline double lscv_bandwidth(std::span<const double> samples, std::span<const double> grid) {
  if (grid.empty()) throw InvalidInput("lscv_bandwidth: empty bandwidth grid");
  if (samples.size() < 2) throw InvalidInput("lscv_bandwidth: need at least two samples");
  const auto s = detail::sorted_copy(samples);
  double best_h = grid[0];
  double best = std::numeric_limits<double>::infinity();
  for (double h : grid) {
    const double score = lscv_score_sorted(s, h);
    if (score < best) {
      best = score;
      best_h = h;
    }
  }
  return best_h;
}

}  // namespace mvlmn
