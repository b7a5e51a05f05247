#include "wsre/util/stats.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "wsre/error.h"

namespace wsre {

double PercentileSorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw ValidationError("percentile of an empty sample");
  if (!(q >= 0.0 && q <= 100.0)) {
    throw ValidationError("percentile rank must lie in [0, 100]");
  }
  const double rank = q / 100.0 * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(rank));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = rank - static_cast<double>(lo);
  if (frac == 0.0) return sorted[lo];
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

double Percentile(std::span<const double> values, double q) {
  if (values.empty()) throw ValidationError("percentile of an empty sample");
  if (!(q >= 0.0 && q <= 100.0)) {
    throw ValidationError("percentile rank must lie in [0, 100]");
  }
  // Only the two order statistics around the rank are needed.
  std::vector<double> v(values.begin(), values.end());
  const double rank = q / 100.0 * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(rank));
  const auto nth = v.begin() + static_cast<std::ptrdiff_t>(lo);
  std::nth_element(v.begin(), nth, v.end());
  const double frac = rank - static_cast<double>(lo);
  if (frac == 0.0 || lo + 1 >= v.size()) return *nth;
  const double next = *std::min_element(nth + 1, v.end());
  return *nth + frac * (next - *nth);
}

double Mean(std::span<const double> values) {
  if (values.empty()) return 0.0;
  return std::accumulate(values.begin(), values.end(), 0.0) /
         static_cast<double>(values.size());
}

}  // namespace wsre
