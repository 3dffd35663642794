#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "resq/calibration.hpp"
#include "resq/model.hpp"
#include "resq/synth.hpp"
#include "resq/trace.hpp"
#include "resq/trace_io.hpp"

namespace resq::testing {

// Reference per-sample TLS fits: Qi at the reference photon number (1 or
// ~10), beta, F*d0 and d_other. Sample 7a appears in two sets.
struct ReferenceFit {
  const char* sample;
  double ref_n;
  double qi_ref;
  double beta;
  double f_delta_tls0;
  double delta_other;
};

inline constexpr std::array<ReferenceFit, 15> kReferenceFits{{
    {"1", 1.0, 1.1e6, 0.22, 0.87e-6, 2.3e-7},
    {"2", 1.0, 0.24e6, 0.29, 4.4e-6, 2.3e-7},
    {"3", 1.0, 0.95e6, 0.27, 1.0e-6, 2.0e-7},
    {"4", 1.0, 0.8e6, 0.20, 1.4e-6, 2.1e-7},
    {"5", 1.0, 0.92e6, 0.27, 0.97e-6, 2.1e-7},
    {"6", 1.0, 1.1e6, 0.24, 0.87e-6, 2.4e-7},
    {"7a", 10.0, 1.1e6, 0.36, 0.86e-6, 1.5e-7},
    {"7b", 10.0, 2.2e6, 0.33, 0.27e-6, 2.0e-7},
    {"7c", 10.0, 2.1e6, 0.36, 0.39e-6, 1.7e-7},
    {"8", 1.0, 0.40e6, 0.29, 2.2e-6, 1.6e-7},
    {"7a", 1.0, 1.0e6, 0.36, 0.86e-6, 1.5e-7},
    {"9a", 1.0, 0.58e6, 0.23, 1.5e-6, 1.3e-7},
    {"10", 1.0, 0.32e6, 0.26, 2.9e-6, 1.9e-7},
    {"11", 1.0, 0.48e6, 0.24, 2.0e-6, 2.0e-7},
    {"12", 1.0, 0.38e6, 0.21, 2.6e-6, 1.8e-7},
}};

inline constexpr double kFr = 4.4e9;

// n_c such that the model reproduces qi_ref at ref_n:
// (1 + ref_n/n_c)^beta = F*d0*tanh / (1/qi_ref - d_other).
inline double derived_n_c(const ReferenceFit& r, double temperature = 0.0) {
  const double tf = thermal_factor(angular(kFr), temperature);
  const double ratio = r.f_delta_tls0 * tf / (1.0 / r.qi_ref - r.delta_other);
  return r.ref_n / (std::pow(ratio, 1.0 / r.beta) - 1.0);
}

inline TlsModelParams tls_params(const ReferenceFit& r,
                                 double temperature = constants::kDefaultTemperature) {
  TlsModelParams p;
  p.f_delta_tls0 = r.f_delta_tls0;
  p.beta = r.beta;
  p.delta_other = r.delta_other;
  p.n_c = derived_n_c(r, temperature);
  p.omega0 = angular(kFr);
  p.temperature = temperature;
  return p;
}

inline const ReferenceFit& reference(const char* sample, double ref_n) {
  for (const auto& r : kReferenceFits) {
    if (std::string(r.sample) == sample && r.ref_n == ref_n) return r;
  }
  throw std::out_of_range(sample);
}

// Sweep of `n_powers` drive levels whose photon numbers span roughly
// 1e-1 to 1e6 for |Qe| = 1e6 at 4.4 GHz behind 70 dB.
inline synth::SynthSpec sweep_spec(const ReferenceFit& r, double noise_sigma, std::uint64_t seed,
                                   std::size_t n_powers = 12) {
  synth::SynthSpec s;
  s.res = {kFr, 5e5, 1e6, 0.05};
  s.tls = tls_params(r);
  s.env = {0.8, 1.1, 45e-9};
  s.attenuation_db = 70.0;
  const double lo = -96.0;
  const double hi = -28.0;
  for (std::size_t k = 0; k < n_powers; ++k) {
    s.powers_dbm.push_back(lo + (hi - lo) * static_cast<double>(k) /
                                    static_cast<double>(n_powers - 1));
  }
  s.noise_sigma = noise_sigma;
  s.seed = seed;
  s.sample_id = r.sample;
  s.resonator_id = "r0";
  return s;
}

// Uniform grid of `n` samples covering `span_linewidths` fr/Ql around fr,
// with optional complex Gaussian noise of per-quadrature `sigma` (absolute).
inline Trace model_trace(const ResonanceParams& res, const EnvironmentParams& env,
                         std::size_t n = 401, double span_linewidths = 10.0, double sigma = 0.0,
                         std::uint64_t seed = 1) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<ComplexSample> s;
  s.reserve(n);
  const double span = span_linewidths * res.fr / res.q_loaded;
  for (std::size_t k = 0; k < n; ++k) {
    const double f =
        res.fr + span * (static_cast<double>(k) / static_cast<double>(n - 1) - 0.5);
    Complex z = s21_notch(f, res, env);
    if (sigma > 0.0) z += Complex(sigma * gauss(rng), sigma * gauss(rng));
    s.push_back({f, z});
  }
  return Trace(std::move(s));
}

// Fresh directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("resq_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

// `count` resonators of one reference sample, differing only in seed.
inline io::Manifest synthetic_manifest(const std::string& name, const ReferenceFit& r, int count,
                                       double noise_sigma = 1e-3) {
  std::vector<synth::SynthSpec> specs;
  for (int k = 0; k < count; ++k) {
    auto s = sweep_spec(r, noise_sigma, 100 + static_cast<std::uint64_t>(k));
    s.resonator_id = "r" + std::to_string(k);
    specs.push_back(s);
  }
  return io::read_manifest(io::write_synth_dataset(specs, scratch_dir(name)).manifest_path);
}

inline double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

}  // namespace resq::testing
