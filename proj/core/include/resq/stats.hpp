#pragma once

#include <span>

namespace resq::stats {

struct BoxStats {
  double min = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double max = 0.0;

  friend bool operator==(const BoxStats&, const BoxStats&) = default;
};

/// Quantile with linear interpolation between order statistics and
/// inclusive endpoints: position h = (N - 1) p on the sorted values.
double quantile(std::span<const double> values, double p);

/// (min, Q1, median, Q3, max). Throws kEmptyInput on an empty list and
/// kInvalidArgument on non-finite values.
BoxStats quartiles(std::span<const double> values);

double mean(std::span<const double> values);
double median(std::span<const double> values);

}  // namespace resq::stats
