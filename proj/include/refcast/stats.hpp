#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <utility>
#include <vector>

#include "refcast/error.hpp"

namespace refcast::stats {

inline double mean(std::span<const double> xs) {
  if (xs.empty()) throw Error(ErrorCode::InvalidArgument, "mean of empty sample");
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

/// Sample standard deviation (n - 1 denominator); zero for a single value.
inline double stdev(std::span<const double> xs) {
  if (xs.size() < 2) return 0.0;
  const double m = mean(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

inline double median_sorted(std::span<const double> sorted) {
  if (sorted.empty()) throw Error(ErrorCode::InvalidArgument, "median of empty sample");
  const auto n = sorted.size();
  if (n % 2 == 1) return sorted[n / 2];
  return sorted[n / 2 - 1] + (sorted[n / 2] - sorted[n / 2 - 1]) / 2.0;
}

/// 1-based rank of the smallest order statistic whose ECDF value reaches
/// `level`, i.e. ceil(n * level) clamped to [1, n]. Products within a few
/// ulps of an integer are snapped so that e.g. 100 * 0.8 gives rank 80.
inline std::size_t nearest_rank(std::size_t n, double level) {
  if (n == 0) throw Error(ErrorCode::InvalidArgument, "rank in empty sample");
  const long double x = static_cast<long double>(n) * static_cast<long double>(level);
  const long double nearest = std::round(x);
  long double rank = std::fabs(x - nearest) <= 1e-12L * std::max(1.0L, x)
                         ? nearest
                         : std::ceil(x);
  rank = std::clamp(rank, 1.0L, static_cast<long double>(n));
  return static_cast<std::size_t>(rank);
}

/// Nearest-rank (ceiling) quantile of an ascending sample.
inline double quantile_nearest_rank(std::span<const double> sorted, double level) {
  return sorted[nearest_rank(sorted.size(), level) - 1];
}

struct EcdfPoint {
  double value;
  double cumulative;

  friend bool operator==(const EcdfPoint&, const EcdfPoint&) = default;
};

/// Right-continuous step function of the sample: one point per distinct value.
inline std::vector<EcdfPoint> ecdf(std::span<const double> sorted) {
  std::vector<EcdfPoint> points;
  const double n = static_cast<double>(sorted.size());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (i + 1 < sorted.size() && sorted[i + 1] == sorted[i]) continue;
    points.push_back({sorted[i], static_cast<double>(i + 1) / n});
  }
  return points;
}

/// F(x) = #{sample <= x} / n.
inline double ecdf_at(std::span<const double> sorted, double x) {
  if (sorted.empty()) return 0.0;
  auto it = std::upper_bound(sorted.begin(), sorted.end(), x);
  return static_cast<double>(it - sorted.begin()) / static_cast<double>(sorted.size());
}

/// Pearson product-moment correlation. Throws on fewer than two points or a
/// constant series.
inline double pearson(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) {
    throw Error(ErrorCode::InvalidArgument, "correlation series differ in length");
  }
  if (xs.size() < 2) {
    throw Error(ErrorCode::InsufficientPairs, "correlation needs at least two pairs");
  }
  const double mx = mean(xs);
  const double my = mean(ys);
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx;
    const double dy = ys[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx == 0.0 || syy == 0.0) {
    throw Error(ErrorCode::DegenerateVariance, "constant series has no correlation");
  }
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

}  // namespace refcast::stats
