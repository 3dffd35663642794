#pragma once

// Trace files, run manifests and synthetic-spec documents.
//
// Trace file: UTF-8 CSV with header `frequency_hz,s21_real,s21_imag`, one
// sample per row, '.' decimal point. Metadata lives in the manifest.

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "resq/synth.hpp"
#include "resq/trace.hpp"

namespace resq::io {

inline constexpr const char* kTraceHeader = "frequency_hz,s21_real,s21_imag";

/// Parses a trace CSV. Out-of-order rows are sorted and a warning is
/// appended to `warnings` (when given). ParseError / ValidationError carry
/// the 1-based line number of the offending row.
Trace parse_trace_csv(std::istream& in, TraceMeta meta = {},
                      std::vector<std::string>* warnings = nullptr);

/// Reads a trace file; kIoError when it cannot be opened.
Trace ingest_trace(const std::filesystem::path& path, TraceMeta meta = {},
                   std::vector<std::string>* warnings = nullptr);

/// Writes shortest round-trip decimal representations.
void write_trace_csv(const Trace& trace, std::ostream& out);
void write_trace_csv(const Trace& trace, const std::filesystem::path& path);

struct ManifestRun {
  std::string trace_path;  // relative paths resolve against the manifest's directory
  std::string sample_id;
  std::string resonator_id;
  double power_dbm = 0.0;
  std::optional<double> attenuation_db;
  std::optional<double> temperature_k;
};

struct Manifest {
  std::vector<ManifestRun> runs;
  std::optional<double> default_attenuation_db;
  std::optional<double> default_temperature_k;
  std::filesystem::path base_dir;

  std::filesystem::path resolve(const ManifestRun& run) const;
  /// Per-run value, else the default; attenuation has no built-in default.
  double attenuation_db(const ManifestRun& run) const;
  double temperature_k(const ManifestRun& run) const;
};

/// Distinct trace paths, attenuation >= 0 present for every run,
/// temperature > 0. Throws kValidationError.
void validate(const Manifest& manifest);

Manifest parse_manifest(const std::string& json_text, std::filesystem::path base_dir = {});
Manifest read_manifest(const std::filesystem::path& path);
void write_manifest(const Manifest& manifest, const std::filesystem::path& path);

/// A synth document holds either one spec object or {"resonators": [...]}.
std::vector<synth::SynthSpec> parse_synth_specs(const std::string& json_text);
std::vector<synth::SynthSpec> read_synth_specs(const std::filesystem::path& path);

struct SynthOutput {
  std::filesystem::path manifest_path;
  std::filesystem::path truth_path;
  std::size_t n_traces = 0;
};

/// Writes traces/<sample>__<resonator>__p<idx>.csv, manifest.json and
/// ground_truth.json under `out_dir`.
SynthOutput write_synth_dataset(const std::vector<synth::SynthSpec>& specs,
                                const std::filesystem::path& out_dir);

/// Shortest round-trip decimal form of a double ("inf"/"nan" for non-finite).
std::string format_double(double v);

}  // namespace resq::io
