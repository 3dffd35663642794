#pragma once

// Notch-resonator extraction from a complex S21 sweep: cable-delay removal,
// algebraic circle fit, arctan phase fit and parameter assembly.

#include <span>
#include <string>
#include <vector>

#include "resq/model.hpp"
#include "resq/trace.hpp"

namespace resq::circlefit {

enum class QualityFlag : unsigned {
  kNone = 0,
  kNarrowSpan = 1u << 0,
  kLowSnr = 1u << 1,
  kShallowDip = 1u << 2,
  kDelayUnstable = 1u << 3,
};

struct QualityFlags {
  unsigned bits = 0;

  bool has(QualityFlag f) const noexcept { return (bits & static_cast<unsigned>(f)) != 0; }
  void set(QualityFlag f) noexcept { bits |= static_cast<unsigned>(f); }
  bool empty() const noexcept { return bits == 0; }
  std::vector<std::string> names() const;

  friend bool operator==(const QualityFlags&, const QualityFlags&) = default;
};

struct CircleGeom {
  Complex center;
  double radius = 0.0;
  double rms_residual = 0.0;
  /// Standard deviations of (center.real, center.imag, radius), from the
  /// geometric residual Jacobian at the fitted circle.
  double sigma_center_re = 0.0;
  double sigma_center_im = 0.0;
  double sigma_radius = 0.0;
};

/// Taubin algebraic circle fit. Throws kDegenerate when fewer than three
/// points are given or the scatter matrix condition number exceeds 1e12.
CircleGeom fit_circle(std::span<const Complex> points);

struct DelayEstimate {
  double delay = 0.0;   // s
  double seed = 0.0;    // edge phase-slope estimate, s
  double lower = 0.0;   // search bracket, s
  double upper = 0.0;
  double residual = 0.0;
  bool unstable = false;
};

/// Delay that minimizes the circle-fit rms residual of the delay-corrected
/// trace. The search bracket is seed +/- max(5|seed|, 1/span), scanned on a
/// grid and refined with Brent's method.
DelayEstimate estimate_delay(const Trace& trace);

struct PhaseFit {
  double fr = 0.0;
  double q_loaded = 0.0;
  double theta0 = 0.0;
  double sigma_fr = 0.0;
  double sigma_q_loaded = 0.0;
  double sigma_theta0 = 0.0;
  double swing = 0.0;       // total unwrapped phase excursion, rad
  double rms_residual = 0.0;
  bool narrow_span = false;  // swing < pi
};

/// theta(f) = theta0 + 2 atan(2 Ql (1 - f/fr)), least-squares fit to
/// unwrapped angles. `weights` are per-point 1/sigma (may be empty for
/// uniform weighting). Throws kDidNotConverge if the fit fails.
PhaseFit fit_phase(std::span<const double> freqs, std::span<const double> angles,
                   std::span<const double> weights = {});

/// Shortest-arc phase unwrapping. Returns the largest absolute step.
double unwrap_in_place(std::span<double> angles);

/// Extraction result. The constructor asserts that `qi` agrees with
/// qi_from_circle(res) to 1e-12 relative.
class FitReport {
 public:
  FitReport(ResonanceParams res, EnvironmentParams env, double qi, double qi_sigma,
            double chi2_reduced, QualityFlags flags);

  const ResonanceParams& res() const noexcept { return res_; }
  const EnvironmentParams& env() const noexcept { return env_; }
  double qi() const noexcept { return qi_; }
  double qi_sigma() const noexcept { return qi_sigma_; }
  double chi2_reduced() const noexcept { return chi2_reduced_; }
  QualityFlags flags() const noexcept { return flags_; }

  // Diagnostics that are useful downstream but not part of the contract.
  CircleGeom circle;
  double sigma_q_loaded = 0.0;
  double sigma_fr = 0.0;

 private:
  ResonanceParams res_;
  EnvironmentParams env_;
  double qi_;
  double qi_sigma_;
  double chi2_reduced_;
  QualityFlags flags_;
};

/// Full pipeline on one trace.
FitReport extract(const Trace& trace);

}  // namespace resq::circlefit
