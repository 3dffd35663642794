// resq: command-line front end.
//
//   resq fit-trace <file> [--json]
//   resq fit-sweep --manifest <file> [--ref-n 1|10] [--out DIR] [--format csv,json,svg]
//   resq synth --spec <json> --out DIR
//   resq report --in DIR [--out DIR] --format csv,json,svg
//
// Exit codes: 0 success, 1 validation/parse error, 2 fit failure, 3 I/O error.

#include <CLI11.hpp>
#include <cstdio>
#include <iostream>
#include <nlohmann/json.hpp>

#include "resq/circlefit.hpp"
#include "resq/error.hpp"
#include "resq/pipeline.hpp"
#include "resq/report.hpp"
#include "resq/trace_io.hpp"

namespace {

enum Exit : int { kOk = 0, kInvalid = 1, kFitFailure = 2, kIo = 3 };

int exit_code(resq::ErrorCode code) {
  using resq::ErrorCode;
  switch (code) {
    case ErrorCode::kParseError:
    case ErrorCode::kValidationError:
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kEmptyInput:
      return kInvalid;
    case ErrorCode::kIoError:
      return kIo;
    default:
      return kFitFailure;
  }
}

int fit_trace(const std::string& path, bool as_json) {
  std::vector<std::string> warnings;
  const auto trace = resq::io::ingest_trace(path, {}, &warnings);
  for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
  const auto r = resq::circlefit::extract(trace);
  if (as_json) {
    nlohmann::ordered_json j;
    j["fr"] = r.res().fr;
    j["q_loaded"] = r.res().q_loaded;
    j["q_ext_mag"] = r.res().q_ext_mag;
    j["phi0"] = r.res().phi0;
    j["q_coupling"] = r.res().q_coupling();
    j["qi"] = r.qi();
    j["qi_sigma"] = r.qi_sigma();
    j["amp"] = r.env().amp;
    j["phase0"] = r.env().phase0;
    j["delay"] = r.env().delay;
    j["chi2_reduced"] = r.chi2_reduced();
    j["flags"] = r.flags().names();
    std::cout << j.dump(2) << '\n';
  } else {
    std::printf("fr          %.9e Hz\n", r.res().fr);
    std::printf("Ql          %.6e\n", r.res().q_loaded);
    std::printf("|Qe|        %.6e\n", r.res().q_ext_mag);
    std::printf("phi0        %.6f rad\n", r.res().phi0);
    std::printf("Qc          %.6e\n", r.res().q_coupling());
    std::printf("Qi          %.6e +- %.3e\n", r.qi(), r.qi_sigma());
    std::printf("amp         %.6f\n", r.env().amp);
    std::printf("phase0      %.6f rad\n", r.env().phase0);
    std::printf("delay       %.6e s\n", r.env().delay);
    std::printf("chi2_red    %.4f\n", r.chi2_reduced());
    std::string flags;
    for (const auto& f : r.flags().names()) flags += (flags.empty() ? "" : ",") + f;
    std::printf("flags       %s\n", flags.empty() ? "-" : flags.c_str());
  }
  return kOk;
}

void emit_all(const std::vector<resq::pipeline::SampleStats>& stats, const std::string& formats,
              const std::string& out_dir) {
  for (auto f : resq::report::parse_formats(formats)) resq::report::emit_report(stats, f, out_dir);
}

int fit_sweep(const std::string& manifest_path, double ref_n, const std::string& out_dir,
              const std::string& formats) {
  const auto manifest = resq::io::read_manifest(manifest_path);
  (void)resq::report::parse_formats(formats);
  const auto stats = resq::pipeline::run_pipeline(manifest, {ref_n, 0});
  emit_all(stats, formats, out_dir);

  int code = kOk;
  for (const auto& s : stats) {
    for (const auto& r : s.resonators) {
      if (r.ok) continue;
      std::cerr << "error: " << s.sample_id << '/' << r.resonator_id << ": " << r.error << '\n';
      const int c = exit_code(r.error_code.value_or(resq::ErrorCode::kDidNotConverge));
      // Priority: I/O over parse/validation over fit failure.
      auto rank = [](int e) { return e == kIo ? 3 : e == kInvalid ? 2 : e == kFitFailure ? 1 : 0; };
      if (rank(c) > rank(code)) code = c;
    }
  }
  return code;
}

int synth(const std::string& spec_path, const std::string& out_dir) {
  const auto specs = resq::io::read_synth_specs(spec_path);
  const auto out = resq::io::write_synth_dataset(specs, out_dir);
  std::cout << "wrote " << out.n_traces << " traces, " << out.manifest_path.string() << ", "
            << out.truth_path.string() << '\n';
  return kOk;
}

int report(const std::string& in_dir, const std::string& out_dir, const std::string& formats) {
  const auto stats = resq::report::read_report(std::filesystem::path(in_dir) / resq::report::kReportJson);
  emit_all(stats, formats, out_dir.empty() ? in_dir : out_dir);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Superconducting resonator S21 analysis: circle fits, photon-number calibration, TLS loss fits"};
  app.require_subcommand(1);

  std::string trace_path;
  bool as_json = false;
  auto* ft = app.add_subcommand("fit-trace", "Fit one S21 trace and print the resonance parameters");
  ft->add_option("file", trace_path, "Trace CSV (frequency_hz,s21_real,s21_imag)")->required();
  ft->add_flag("--json", as_json, "Print JSON instead of text");

  std::string manifest_path;
  double ref_n = 1.0;
  std::string out_dir = ".";
  std::string formats = "csv,json,svg";
  auto* fs = app.add_subcommand("fit-sweep", "Run the batch pipeline over a manifest");
  fs->add_option("--manifest", manifest_path, "Manifest JSON")->required();
  fs->add_option("--ref-n", ref_n, "Reference photon number for reported Qi")
      ->check(CLI::IsMember({1.0, 10.0}));
  fs->add_option("--out", out_dir, "Output directory");
  fs->add_option("--format", formats, "Comma-separated formats: csv,json,svg");

  std::string spec_path;
  std::string synth_out;
  auto* sy = app.add_subcommand("synth", "Generate synthetic traces, manifest and ground truth");
  sy->add_option("--spec", spec_path, "Synthetic spec JSON")->required();
  sy->add_option("--out", synth_out, "Output directory")->required();

  std::string report_in;
  std::string report_out;
  std::string report_formats = "csv,svg";
  auto* rp = app.add_subcommand("report", "Re-emit tables and figures from report.json");
  rp->add_option("--in", report_in, "Directory holding report.json")->required();
  rp->add_option("--out", report_out, "Output directory (default: --in)");
  rp->add_option("--format", report_formats, "Comma-separated formats: csv,json,svg");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kInvalid;
  }

  try {
    if (*ft) return fit_trace(trace_path, as_json);
    if (*fs) return fit_sweep(manifest_path, ref_n, out_dir, formats);
    if (*sy) return synth(spec_path, synth_out);
    if (*rp) return report(report_in, report_out, report_formats);
  } catch (const resq::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFitFailure;
  }
  return kOk;
}
