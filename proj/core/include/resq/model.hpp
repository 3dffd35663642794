#pragma once

// Closed-form forward models for notch-coupled resonators and the
// two-level-system (TLS) loss law. All public functions take linear
// frequency in Hz; conversion to angular frequency happens internally.

#include <complex>
#include <numbers>

namespace resq {

using Complex = std::complex<double>;

namespace constants {
// SI 2019 exact values.
inline constexpr double kPlanck = 6.62607015e-34;                     // J s
inline constexpr double kHbar = kPlanck / (2.0 * std::numbers::pi);  // J s
inline constexpr double kBoltzmann = 1.380649e-23;                    // J / K
inline constexpr double kDefaultTemperature = 0.010;                  // K
}  // namespace constants

/// Resonance parameters of a notch-type resonator.
///
/// `q_ext_mag` is the magnitude of the complex external quality factor and
/// `phi0` the impedance-mismatch rotation of the resonance circle. The
/// physical coupling quality factor is Qc = |Qe| / cos(phi0).
struct ResonanceParams {
  double fr = 0.0;         // Hz
  double q_loaded = 0.0;
  double q_ext_mag = 0.0;
  double phi0 = 0.0;       // rad

  double q_coupling() const;  // |Qe| / cos(phi0); throws NonPhysical
  double q_internal() const;  // via qi_from_circle

  friend bool operator==(const ResonanceParams&, const ResonanceParams&) = default;
};

/// Measurement-chain environment: amplitude scale, global phase and cable delay.
struct EnvironmentParams {
  double amp = 1.0;
  double phase0 = 0.0;  // rad
  double delay = 0.0;   // s; sign follows exp(-2*pi*i*f*delay)

  friend bool operator==(const EnvironmentParams&, const EnvironmentParams&) = default;
};

/// Parameters of 1/Qi = F*d0 * tanh(hbar*w0/2kT) / (1 + n/nc)^beta + d_other.
/// F and the intrinsic loss are only identifiable as their product.
struct TlsModelParams {
  double f_delta_tls0 = 0.0;
  double n_c = 1.0;
  double beta = 0.25;
  double delta_other = 0.0;
  double omega0 = 0.0;       // rad/s
  double temperature = constants::kDefaultTemperature;  // K

  friend bool operator==(const TlsModelParams&, const TlsModelParams&) = default;
};

struct ComplexSample {
  double freq = 0.0;  // Hz
  Complex s21;

  friend bool operator==(const ComplexSample&, const ComplexSample&) = default;
};

// Invariant checks. Each throws Error(kInvalidArgument) or, for the
// physical-resonator condition, Error(kNonPhysical).
void validate(const ResonanceParams& res);
void validate(const EnvironmentParams& env);
void validate(const TlsModelParams& tls);

/// S21(f) = amp e^{i phase0} e^{-2 pi i f delay}
///          [1 - (Ql/|Qe|) e^{i phi0} / (1 + 2i Ql (f/fr - 1))]
Complex s21_notch(double f, const ResonanceParams& res, const EnvironmentParams& env);

/// 1/Qi = 1/Ql - cos(phi0)/|Qe|. Throws NonPhysical when the right-hand
/// side is not positive.
double qi_from_circle(double q_loaded, double q_ext_mag, double phi0);

/// tanh(hbar*omega0 / (2 kB T)); exactly 1 at T = 0 or for arguments above 30.
double thermal_factor(double omega0, double temperature);

/// TLS loss model evaluated at mean photon number `n`; returns 1/Qi.
double tls_inverse_q(double n, const TlsModelParams& p);

inline double angular(double f_hz) { return 2.0 * std::numbers::pi * f_hz; }

}  // namespace resq
