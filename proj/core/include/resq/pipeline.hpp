#pragma once

// Manifest-driven batch analysis: per resonator extract -> photon number ->
// TLS fit, then per-sample aggregation.

#include <optional>
#include <string>
#include <vector>

#include "resq/calibration.hpp"
#include "resq/error.hpp"
#include "resq/stats.hpp"
#include "resq/tlsfit.hpp"
#include "resq/trace_io.hpp"

namespace resq::pipeline {

struct ResonatorResult {
  std::string resonator_id;
  bool ok = false;
  std::string error;                    // empty when ok
  std::optional<ErrorCode> error_code;  // set when !ok
  double fr = 0.0;                      // mean fitted resonance frequency, Hz
  double temperature_k = 0.0;
  std::vector<calibration::PowerPoint> points;  // sorted by n_mean
  std::optional<tls::TlsFitResult> fit;
  double qi_ref = 0.0;  // qi_at(ref_n)

  friend bool operator==(const ResonatorResult&, const ResonatorResult&) = default;
};

struct SampleSummary {
  stats::BoxStats f_delta_tls0;
  double f_delta_tls0_mean = 0.0;
  double beta_mean = 0.0;
  double beta_median = 0.0;
  double delta_other_mean = 0.0;
  double delta_other_median = 0.0;
  double qi_ref_mean = 0.0;
  double qi_ref_median = 0.0;

  friend bool operator==(const SampleSummary&, const SampleSummary&) = default;
};

struct SampleStats {
  std::string sample_id;
  double ref_n = 1.0;
  std::vector<ResonatorResult> resonators;  // lexicographic by id, failures included
  std::optional<SampleSummary> summary;     // absent when no resonator succeeded
  std::string error;

  std::size_t n_ok() const;
  std::size_t n_failed() const { return resonators.size() - n_ok(); }

  friend bool operator==(const SampleStats&, const SampleStats&) = default;
};

struct Options {
  double ref_n = 1.0;
  /// Worker threads; 0 reads RESQ_THREADS, falling back to hardware concurrency.
  unsigned threads = 0;
};

/// Concurrency from RESQ_THREADS (0 or unset = hardware concurrency).
unsigned threads_from_env();

/// Fits one resonator's traces. Never throws; failures are recorded.
ResonatorResult process_resonator(const io::Manifest& manifest,
                                  const std::vector<const io::ManifestRun*>& runs, double ref_n);

/// Builds summary statistics from resonator results (already ordered).
SampleStats summarize(std::string sample_id, std::vector<ResonatorResult> resonators, double ref_n);

/// Output is ordered by sample id, then resonator id, independent of the
/// manifest's run order and of thread scheduling.
std::vector<SampleStats> run_pipeline(const io::Manifest& manifest, const Options& options = {});

}  // namespace resq::pipeline
