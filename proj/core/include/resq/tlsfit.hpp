#pragma once

// Fit of the TLS loss model to Qi-vs-photon-number data.

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "resq/calibration.hpp"
#include "resq/model.hpp"

namespace resq::tls {

enum class Identifiability : unsigned {
  kNcUnbounded = 1u << 0,
  kBetaAtBound = 1u << 1,
  kSaturationUnreached = 1u << 2,
};

struct IdentifiabilityFlags {
  unsigned bits = 0;

  bool has(Identifiability f) const noexcept { return (bits & static_cast<unsigned>(f)) != 0; }
  void set(Identifiability f) noexcept { bits |= static_cast<unsigned>(f); }
  bool empty() const noexcept { return bits == 0; }
  std::vector<std::string> names() const;
  static IdentifiabilityFlags from_names(std::span<const std::string> names);

  friend bool operator==(const IdentifiabilityFlags&, const IdentifiabilityFlags&) = default;
};

/// One-sigma uncertainties; +inf when the data leave a parameter unconstrained.
struct TlsSigmas {
  double f_delta_tls0 = 0.0;
  double n_c = 0.0;
  double beta = 0.0;
  double delta_other = 0.0;

  friend bool operator==(const TlsSigmas&, const TlsSigmas&) = default;
};

struct TlsFitResult {
  TlsModelParams params;
  TlsSigmas sigmas;
  double chi2_reduced = 0.0;
  IdentifiabilityFlags identifiability;

  friend bool operator==(const TlsFitResult&, const TlsFitResult&) = default;
};

/// Partial derivatives of tls_inverse_q with respect to
/// (f_delta_tls0, n_c, beta, delta_other).
std::array<double, 4> tls_jacobian(double n, const TlsModelParams& params);

struct FitOptions {
  int n_c_seeds = 7;
  /// Upper bound for beta; the lower bound is open at zero.
  double beta_max = 0.5;
  /// Extra start point tried in addition to the seed grid.
  std::optional<TlsModelParams> start;
};

/// Weighted bounded least squares on residuals (1/qi - model) / sigma with
/// sigma = qi_sigma / qi^2. Multi-start over log-spaced n_c seeds between
/// min(n)/10 and 10 max(n); the lowest chi^2 wins, ties go to the smaller n_c.
///
/// Throws kInsufficientSpan when the points cover less than two decades in
/// n (or fewer than four points are given), kDidNotConverge when no start
/// converges.
TlsFitResult fit_tls(std::span<const calibration::PowerPoint> points, double f0,
                     double temperature = constants::kDefaultTemperature,
                     const FitOptions& options = {});

/// Qi = 1 / tls_inverse_q(n, result.params).
double qi_at(double n, const TlsFitResult& result);

}  // namespace resq::tls
