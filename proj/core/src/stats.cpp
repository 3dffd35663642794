#include "resq/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "resq/error.hpp"

namespace resq::stats {

namespace {

std::vector<double> sorted_copy(std::span<const double> values) {
  if (values.empty()) throw Error(ErrorCode::kEmptyInput, "no values");
  for (double v : values)
    if (!std::isfinite(v)) throw Error(ErrorCode::kInvalidArgument, "non-finite value");
  std::vector<double> s(values.begin(), values.end());
  std::sort(s.begin(), s.end());
  return s;
}

double quantile_sorted(const std::vector<double>& s, double p) {
  const double h = static_cast<double>(s.size() - 1) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, s.size() - 1);
  return s[lo] + (h - static_cast<double>(lo)) * (s[hi] - s[lo]);
}

}  // namespace

double quantile(std::span<const double> values, double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorCode::kInvalidArgument, "quantile outside [0, 1]");
  return quantile_sorted(sorted_copy(values), p);
}

BoxStats quartiles(std::span<const double> values) {
  const auto s = sorted_copy(values);
  return {s.front(), quantile_sorted(s, 0.25), quantile_sorted(s, 0.5), quantile_sorted(s, 0.75),
          s.back()};
}

double mean(std::span<const double> values) {
  if (values.empty()) throw Error(ErrorCode::kEmptyInput, "no values");
  return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

double median(std::span<const double> values) { return quantile_sorted(sorted_copy(values), 0.5); }

}  // namespace resq::stats
