#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <vector>

#include "prehoc/error.hpp"

namespace prehoc::stats {

inline constexpr double kSkewnessBound = 10000.0;
inline constexpr double kKurtosisMin = -2.0;
inline constexpr double kKurtosisMax = 10000.0;

/// Biased (population) central moments of (x - mean) / scale. Shape
/// statistics are scale-free, so only variance() needs `scale`.
struct CentralMoments {
  std::size_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;
  double m3 = 0.0;
  double m4 = 0.0;
  double scale = 1.0;

  double variance() const { return m2 * scale * scale; }
};

/// Two-pass computation. Deviations are divided by the largest absolute
/// deviation before powering so that large-magnitude inputs do not overflow.
inline CentralMoments central_moments(std::span<const double> values) {
  CentralMoments out;
  out.n = values.size();
  if (values.empty()) return out;
  const double n = static_cast<double>(values.size());
  out.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;

  double scale = 0.0;
  for (double v : values) scale = std::max(scale, std::abs(v - out.mean));
  if (scale == 0.0) return out;

  double s2 = 0.0, s3 = 0.0, s4 = 0.0;
  for (double v : values) {
    const double d = (v - out.mean) / scale;
    const double d2 = d * d;
    s2 += d2;
    s3 += d2 * d;
    s4 += d2 * d2;
  }
  out.m2 = s2 / n;
  out.m3 = s3 / n;
  out.m4 = s4 / n;
  out.scale = scale;
  return out;
}

inline double clamp_skewness(double g1) {
  if (std::isnan(g1)) return 0.0;
  return std::clamp(g1, -kSkewnessBound, kSkewnessBound);
}

inline double clamp_kurtosis(double g2) {
  if (std::isnan(g2)) return 0.0;
  return std::clamp(g2, kKurtosisMin, kKurtosisMax);
}

/// Fisher-Pearson g1 = m3 / m2^1.5 from moments, clamped. Zero when m2 = 0.
inline double skewness_from(const CentralMoments& m) {
  if (m.n < 2 || !(m.m2 > 0.0)) return 0.0;
  return clamp_skewness(m.m3 / std::pow(m.m2, 1.5));
}

/// Excess kurtosis g2 = m4 / m2^2 - 3 from moments, clamped. Zero when m2 = 0.
inline double kurtosis_from(const CentralMoments& m) {
  if (m.n < 2 || !(m.m2 > 0.0)) return 0.0;
  return clamp_kurtosis(m.m4 / (m.m2 * m.m2) - 3.0);
}

inline double skewness(std::span<const double> values) { return skewness_from(central_moments(values)); }

inline double kurtosis(std::span<const double> values) { return kurtosis_from(central_moments(values)); }

/// Population variance (divides by n).
inline double variance(std::span<const double> values) { return central_moments(values).variance(); }

/// Linear-interpolation quantile on sorted data (position (n-1)p).
inline double quantile_sorted(std::span<const double> sorted, double p) {
  if (sorted.empty()) return 0.0;
  const double pos = (static_cast<double>(sorted.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + (sorted[hi] - sorted[lo]) * frac;
}

/// Values outside the Tukey fences [Q1 - 1.5 IQR, Q3 + 1.5 IQR]. Fewer than
/// four values never have outliers.
inline std::size_t count_outliers_iqr(std::span<const double> values) {
  if (values.size() < 4) return 0;
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double q1 = quantile_sorted(sorted, 0.25);
  const double q3 = quantile_sorted(sorted, 0.75);
  const double iqr = q3 - q1;
  const double lo = q1 - 1.5 * iqr;
  const double hi = q3 + 1.5 * iqr;
  return static_cast<std::size_t>(
      std::count_if(sorted.begin(), sorted.end(), [&](double v) { return v < lo || v > hi; }));
}

/// Entropy in bits of a count vector. Zero counts contribute nothing.
inline double shannon_entropy(std::span<const std::size_t> counts) {
  if (counts.empty()) throw Error(ErrorCode::EmptyCounts, "entropy of an empty count vector");
  const double total = static_cast<double>(std::accumulate(counts.begin(), counts.end(), std::size_t{0}));
  if (total == 0.0) throw Error(ErrorCode::EmptyCounts, "entropy of all-zero counts");
  double h = 0.0;
  for (auto c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / total;
    h -= p * std::log2(p);
  }
  return h;
}

/// Majority-class fraction. An empty span (regression) gives 0.
inline double class_imbalance(std::span<const std::size_t> counts) {
  if (counts.empty()) return 0.0;
  const auto total = std::accumulate(counts.begin(), counts.end(), std::size_t{0});
  if (total == 0) return 0.0;
  return static_cast<double>(*std::max_element(counts.begin(), counts.end())) / static_cast<double>(total);
}

/// Counts per equal-width bin over [min, max]; the maximum lands in the last bin.
inline std::vector<std::size_t> histogram(std::span<const double> values, std::size_t bins) {
  std::vector<std::size_t> counts(bins, 0);
  if (values.empty() || bins == 0) return counts;
  const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
  const double width = (*mx - *mn) / static_cast<double>(bins);
  for (double v : values) {
    std::size_t b = width > 0.0 ? static_cast<std::size_t>((v - *mn) / width) : 0;
    counts[std::min(b, bins - 1)]++;
  }
  return counts;
}

}  // namespace prehoc::stats
