#pragma once

// Deterministic synthetic power sweeps with known ground truth.
//
// Noise streams: every trace of a sweep draws from its own std::mt19937_64
// seeded with splitmix64(seed ^ splitmix64(power_index)). Gaussian deviates
// come from the Box-Muller transform of 53-bit uniforms
// u = ((x >> 11) + 1) * 2^-53, one (real, imag) pair per sample, so a given
// seed reproduces the same trace in any language that implements these two
// generators.

#include <cstdint>
#include <string>
#include <vector>

#include "resq/model.hpp"
#include "resq/trace.hpp"

namespace resq::synth {

struct SynthSpec {
  /// fr, |Qe| and phi0 are used as given; the loaded Q at each power
  /// follows from the TLS model.
  ResonanceParams res;
  /// omega0 is overwritten with 2 pi res.fr.
  TlsModelParams tls;
  EnvironmentParams env;
  std::vector<double> powers_dbm;
  double attenuation_db = 0.0;
  std::size_t points_per_trace = 401;
  double span_linewidths = 10.0;  // span as a multiple of fr / Ql
  double noise_sigma = 0.0;       // per-quadrature, relative to env.amp
  std::uint64_t seed = 0;
  std::string sample_id = "synthetic";
  std::string resonator_id = "r0";
};

void validate(const SynthSpec& spec);

struct SynthTrace {
  Trace trace;
  ResonanceParams truth;  // resonance at the self-consistent photon number
  double n_mean = 0.0;
  double qi = 0.0;
  double power_chip_w = 0.0;
};

std::uint64_t splitmix64(std::uint64_t x) noexcept;
std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t power_index) noexcept;

/// Self-consistent photon number: solves n = photon_number(P, res(n)) with
/// res(n) carrying Ql from the TLS model at n. Throws kFixedPointDiverged
/// if 100 damped iterations do not reach 1e-10 relative.
double solve_photon_number(double power_chip_w, const ResonanceParams& base,
                           const TlsModelParams& tls);

SynthTrace synth_trace(const SynthSpec& spec, std::size_t power_index);
std::vector<SynthTrace> synth_power_sweep(const SynthSpec& spec);

}  // namespace resq::synth
