#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "resq/pipeline.hpp"

namespace resq::report {

enum class Format { kCsv, kJson, kSvg };

/// Parses a comma-separated list such as "csv,json,svg".
std::vector<Format> parse_formats(std::string_view list);

// File names written by emit_report into the output directory.
inline constexpr const char* kSamplesCsv = "samples.csv";
inline constexpr const char* kResonatorsCsv = "resonators.csv";
inline constexpr const char* kReportJson = "report.json";
inline constexpr const char* kQiSvg = "qi_vs_n.svg";
inline constexpr const char* kBoxSvg = "f_delta_tls0_box.svg";

std::string samples_csv(const std::vector<pipeline::SampleStats>& stats);
std::string resonators_csv(const std::vector<pipeline::SampleStats>& stats);
std::string to_json(const std::vector<pipeline::SampleStats>& stats);
std::vector<pipeline::SampleStats> from_json(const std::string& text);
std::vector<pipeline::SampleStats> read_report(const std::filesystem::path& json_path);

/// Qi vs. mean photon number with the fitted model overlaid, log-log.
std::string svg_qi_vs_n(const std::vector<pipeline::SampleStats>& stats);
/// Box plot of fitted F*delta0 per sample with individual resonators.
std::string svg_f_delta_box(const std::vector<pipeline::SampleStats>& stats);

/// Writes the files for `format` into `out_dir` (created if missing).
/// Throws kInvalidArgument on empty stats, kIoError on write failure.
void emit_report(const std::vector<pipeline::SampleStats>& stats, Format format,
                 const std::filesystem::path& out_dir);

}  // namespace resq::report
