#ifndef WSRE_UTIL_STATS_H_
#define WSRE_UTIL_STATS_H_

#include <span>
#include <vector>

namespace wsre {

// Percentile with linear interpolation between closest ranks (the numpy
// default): rank = q/100 * (n-1). q in [0, 100]. Throws ValidationError on
// an empty sample or q out of range.
double Percentile(std::span<const double> values, double q);

// Same, on an already ascending-sorted sample.
double PercentileSorted(std::span<const double> sorted, double q);

double Mean(std::span<const double> values);

}  // namespace wsre

#endif  // WSRE_UTIL_STATS_H_
