#include "resq/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "resq/calibration.hpp"
#include "resq/error.hpp"

namespace resq::synth {

namespace {

ResonanceParams at_loss(const ResonanceParams& base, double inverse_qi) {
  ResonanceParams r = base;
  r.q_loaded = 1.0 / (inverse_qi + std::cos(base.phi0) / base.q_ext_mag);
  return r;
}

TlsModelParams with_frequency(TlsModelParams tls, double fr) {
  tls.omega0 = angular(fr);
  return tls;
}

double uniform53(std::mt19937_64& gen) {
  return static_cast<double>((gen() >> 11) + 1) * 0x1.0p-53;
}

}  // namespace

void validate(const SynthSpec& spec) {
  if (!(spec.res.fr > 0.0) || !(spec.res.q_ext_mag > 0.0) ||
      !(std::abs(spec.res.phi0) < std::numbers::pi / 2)) {
    throw Error(ErrorCode::kInvalidArgument, "synth resonance needs fr > 0, |Qe| > 0, |phi0| < pi/2");
  }
  resq::validate(with_frequency(spec.tls, spec.res.fr));
  resq::validate(spec.env);
  if (spec.points_per_trace < Trace::kMinSamples)
    throw Error(ErrorCode::kInvalidArgument, "points_per_trace must be >= 16");
  if (!(spec.span_linewidths >= 4.0))
    throw Error(ErrorCode::kInvalidArgument, "span_linewidths must be >= 4");
  if (!(spec.noise_sigma >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "noise_sigma must be >= 0");
  if (!(spec.attenuation_db >= 0.0))
    throw Error(ErrorCode::kInvalidArgument, "attenuation_db must be >= 0");
}

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t power_index) noexcept {
  return splitmix64(seed ^ splitmix64(power_index));
}

double solve_photon_number(double power_chip_w, const ResonanceParams& base,
                           const TlsModelParams& tls) {
  // Iterate in log n; the map's slope lies in [0, 2 beta) so secant damping
  // w = 1 / (1 - slope) converges quickly.
  auto g = [&](double log_n) {
    const double n = std::exp(log_n);
    return std::log(calibration::photon_number(power_chip_w, at_loss(base, tls_inverse_q(n, tls))));
  };
  double x = std::log(calibration::photon_number(power_chip_w, at_loss(base, tls_inverse_q(0.0, tls))));
  double gx = g(x);
  double x_prev = x;
  double g_prev = gx;
  for (int it = 0; it < 100; ++it) {
    const double diff = gx - x;
    if (std::abs(diff) <= 1e-12) return std::exp(gx);
    double slope = 0.0;
    if (it > 0 && x != x_prev) slope = std::clamp((gx - g_prev) / (x - x_prev), 0.0, 0.95);
    x_prev = x;
    g_prev = gx;
    x += diff / (1.0 - slope);
    gx = g(x);
    if (!std::isfinite(gx)) break;
  }
  throw Error(ErrorCode::kFixedPointDiverged, "photon-number iteration did not converge");
}

SynthTrace synth_trace(const SynthSpec& spec, std::size_t power_index) {
  validate(spec);
  if (power_index >= spec.powers_dbm.size())
    throw Error(ErrorCode::kInvalidArgument, "power index out of range");

  const TlsModelParams tls = with_frequency(spec.tls, spec.res.fr);
  SynthTrace out;
  out.power_chip_w = calibration::dbm_to_watts(spec.powers_dbm[power_index], spec.attenuation_db);
  out.n_mean = solve_photon_number(out.power_chip_w, spec.res, tls);
  out.truth = at_loss(spec.res, tls_inverse_q(out.n_mean, tls));
  out.qi = out.truth.q_internal();

  std::mt19937_64 gen(stream_seed(spec.seed, power_index));
  const std::size_t n = spec.points_per_trace;
  const double width = spec.span_linewidths / out.truth.q_loaded;
  std::vector<ComplexSample> samples(n);
  const double sigma = spec.noise_sigma * spec.env.amp;
  for (std::size_t k = 0; k < n; ++k) {
    const double frac = static_cast<double>(k) / static_cast<double>(n - 1) - 0.5;
    const double f = spec.res.fr * (1.0 + width * frac);
    Complex s = s21_notch(f, out.truth, spec.env);
    if (sigma > 0.0) {
      const double u1 = uniform53(gen);
      const double u2 = uniform53(gen);
      const double rho = std::sqrt(-2.0 * std::log(u1));
      const double ang = 2.0 * std::numbers::pi * u2;
      s += Complex(sigma * rho * std::cos(ang), sigma * rho * std::sin(ang));
    }
    samples[k] = {f, s};
  }
  TraceMeta meta;
  meta.power_dbm = spec.powers_dbm[power_index];
  meta.attenuation_db = spec.attenuation_db;
  meta.temperature_k = spec.tls.temperature;
  meta.sample_id = spec.sample_id;
  meta.resonator_id = spec.resonator_id;
  out.trace = Trace(std::move(samples), std::move(meta));
  return out;
}

std::vector<SynthTrace> synth_power_sweep(const SynthSpec& spec) {
  std::vector<SynthTrace> out;
  out.reserve(spec.powers_dbm.size());
  for (std::size_t i = 0; i < spec.powers_dbm.size(); ++i) out.push_back(synth_trace(spec, i));
  return out;
}

}  // namespace resq::synth
