#pragma once

// Box-constrained Levenberg-Marquardt for small dense problems.

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace resq::lsq {

/// Fills `residuals` (size m) and, when `jacobian` is non-empty, the
/// row-major m x n Jacobian of the residuals.
using ResidualFn = std::function<void(std::span<const double> x, std::span<double> residuals,
                                      std::span<double> jacobian)>;

struct Options {
  int max_iterations = 500;
  double ftol = 1e-14;  // relative cost decrease
  double xtol = 1e-13;  // relative step size
  double gtol = 1e-14;  // scaled projected gradient
  double initial_lambda = 1e-3;
};

struct Result {
  std::vector<double> x;
  double cost = 0.0;  // sum of squared residuals
  int iterations = 0;
  bool converged = false;
  /// Row-major n x n (J^T J)^{-1} at the solution. Directions the data do
  /// not constrain get +inf on the diagonal.
  std::vector<double> covariance;
};

/// Minimizes ||r(x)||^2 subject to lower <= x <= upper (infinite bounds allowed).
Result minimize(const ResidualFn& fn, std::size_t n_residuals, std::vector<double> x0,
                std::span<const double> lower, std::span<const double> upper,
                const Options& options = {});

/// Unscaled (J^T J)^{-1} for a row-major m x n Jacobian; unidentifiable
/// parameters get +inf variance.
std::vector<double> covariance_from_jacobian(std::span<const double> jacobian, std::size_t m,
                                             std::size_t n);

}  // namespace resq::lsq
