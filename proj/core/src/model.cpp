#include "resq/model.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "resq/error.hpp"

namespace resq {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kNonPhysical: return "NonPhysical";
    case ErrorCode::kDegenerate: return "Degenerate";
    case ErrorCode::kInsufficientSpan: return "InsufficientSpan";
    case ErrorCode::kDidNotConverge: return "DidNotConverge";
    case ErrorCode::kFixedPointDiverged: return "FixedPointDiverged";
    case ErrorCode::kEmptyInput: return "EmptyInput";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kValidationError: return "ValidationError";
    case ErrorCode::kIoError: return "IoError";
  }
  return "Unknown";
}

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw Error(ErrorCode::kInvalidArgument, what);
}

}  // namespace

void validate(const ResonanceParams& res) {
  require(std::isfinite(res.fr) && res.fr > 0.0, "resonance frequency must be positive");
  require(std::isfinite(res.q_loaded) && res.q_loaded > 0.0, "loaded Q must be positive");
  require(std::isfinite(res.q_ext_mag) && res.q_ext_mag > 0.0, "|Qe| must be positive");
  require(std::isfinite(res.phi0) && std::abs(res.phi0) < std::numbers::pi / 2,
          "phi0 must lie in (-pi/2, pi/2)");
  (void)qi_from_circle(res.q_loaded, res.q_ext_mag, res.phi0);
}

void validate(const EnvironmentParams& env) {
  require(std::isfinite(env.amp) && env.amp > 0.0, "amplitude must be positive");
  require(std::isfinite(env.phase0), "phase must be finite");
  require(std::isfinite(env.delay), "delay must be finite");
}

void validate(const TlsModelParams& tls) {
  require(std::isfinite(tls.f_delta_tls0) && tls.f_delta_tls0 >= 0.0, "F*delta0 must be >= 0");
  require(std::isfinite(tls.n_c) && tls.n_c > 0.0, "n_c must be positive");
  require(std::isfinite(tls.beta) && tls.beta > 0.0 && tls.beta <= 0.5,
          "beta must lie in (0, 0.5]");
  require(std::isfinite(tls.delta_other) && tls.delta_other >= 0.0, "delta_other must be >= 0");
  require(std::isfinite(tls.omega0) && tls.omega0 > 0.0, "omega0 must be positive");
  require(std::isfinite(tls.temperature) && tls.temperature >= 0.0, "temperature must be >= 0");
}

double ResonanceParams::q_coupling() const {
  const double c = std::cos(phi0);
  if (!(c > 0.0)) throw Error(ErrorCode::kNonPhysical, "cos(phi0) <= 0: coupling Q undefined");
  return q_ext_mag / c;
}

double ResonanceParams::q_internal() const { return qi_from_circle(q_loaded, q_ext_mag, phi0); }

Complex s21_notch(double f, const ResonanceParams& res, const EnvironmentParams& env) {
  using namespace std::complex_literals;
  const double x = f / res.fr - 1.0;
  const Complex dip = (res.q_loaded / res.q_ext_mag) * std::polar(1.0, res.phi0) /
                      (1.0 + 2.0i * res.q_loaded * x);
  const Complex chain = env.amp * std::polar(1.0, env.phase0 - 2.0 * std::numbers::pi * f * env.delay);
  return chain * (1.0 - dip);
}

double qi_from_circle(double q_loaded, double q_ext_mag, double phi0) {
  const double inv_qi = 1.0 / q_loaded - std::cos(phi0) / q_ext_mag;
  if (!(inv_qi > 0.0)) {
    throw Error(ErrorCode::kNonPhysical,
                "1/Ql - cos(phi0)/|Qe| = " + std::to_string(inv_qi) + " is not positive");
  }
  return 1.0 / inv_qi;
}

double thermal_factor(double omega0, double temperature) {
  if (temperature <= 0.0) return 1.0;
  const double arg = constants::kHbar * omega0 / (2.0 * constants::kBoltzmann * temperature);
  if (arg > 30.0) return 1.0;
  return std::tanh(arg);
}

double tls_inverse_q(double n, const TlsModelParams& p) {
  const double saturation = std::pow(1.0 + n / p.n_c, -p.beta);
  return p.f_delta_tls0 * thermal_factor(p.omega0, p.temperature) * saturation + p.delta_other;
}

}  // namespace resq
