#include "resq/trace_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <numeric>
#include <set>
#include <sstream>

#include "resq/error.hpp"

namespace resq::io {

using nlohmann::ordered_json;

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

double parse_field(const std::string& field, std::size_t line, int column) {
  const std::string f = trim(field);
  double v = 0.0;
  const char* first = f.data();
  const char* last = f.data() + f.size();
  if (!f.empty() && *first == '+') ++first;
  const auto res = std::from_chars(first, last, v);
  if (f.empty() || res.ec != std::errc() || res.ptr != last) {
    throw Error(ErrorCode::kParseError,
                "line " + std::to_string(line) + ", column " + std::to_string(column) +
                    ": cannot parse '" + f + "' as a number",
                line);
  }
  if (!std::isfinite(v)) {
    throw Error(ErrorCode::kValidationError,
                "line " + std::to_string(line) + ", column " + std::to_string(column) +
                    ": value is not finite",
                line);
  }
  return v;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw Error(ErrorCode::kIoError, "write to '" + path.string() + "' failed");
}

ordered_json parse_json(const std::string& text) {
  try {
    return ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParseError, std::string("invalid JSON: ") + e.what());
  }
}

template <typename T>
T required(const ordered_json& j, const char* key, const char* where) {
  if (!j.contains(key)) {
    throw Error(ErrorCode::kValidationError, std::string(where) + ": missing '" + key + "'");
  }
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw Error(ErrorCode::kValidationError, std::string(where) + ": bad type for '" + key + "'");
  }
}

template <typename T>
T optional_or(const ordered_json& j, const char* key, T fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw Error(ErrorCode::kValidationError, std::string("bad type for '") + key + "'");
  }
}

std::optional<double> optional_number(const ordered_json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return required<double>(j, key, "manifest");
}

std::string safe_name(const std::string& s) {
  std::string out;
  for (char c : s) out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_') ? c : '_';
  return out.empty() ? "_" : out;
}

}  // namespace

Trace parse_trace_csv(std::istream& in, TraceMeta meta, std::vector<std::string>* warnings) {
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  std::vector<ComplexSample> samples;
  std::vector<std::size_t> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    const std::string t = trim(line);
    if (t.empty()) continue;
    if (!have_header) {
      std::string compact;
      for (char c : t)
        if (c != ' ' && c != '\t') compact += c;
      if (compact != kTraceHeader) {
        throw Error(ErrorCode::kParseError,
                    "line " + std::to_string(line_no) + ": expected header '" + kTraceHeader + "'",
                    line_no);
      }
      have_header = true;
      continue;
    }
    std::vector<std::string> fields;
    std::stringstream ss(t);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() != 3) {
      throw Error(ErrorCode::kParseError,
                  "line " + std::to_string(line_no) + ": expected 3 fields, found " +
                      std::to_string(fields.size()),
                  line_no);
    }
    const double f = parse_field(fields[0], line_no, 1);
    const double re = parse_field(fields[1], line_no, 2);
    const double im = parse_field(fields[2], line_no, 3);
    if (!(f > 0.0)) {
      throw Error(ErrorCode::kValidationError,
                  "line " + std::to_string(line_no) + ": frequency must be positive", line_no);
    }
    samples.push_back({f, {re, im}});
    rows.push_back(line_no);
  }
  if (!have_header) throw Error(ErrorCode::kParseError, "missing header line", 1);
  if (samples.size() < Trace::kMinSamples) {
    throw Error(ErrorCode::kValidationError,
                "trace has " + std::to_string(samples.size()) + " samples; at least " +
                    std::to_string(Trace::kMinSamples) + " are required",
                line_no);
  }
  bool ordered = true;
  for (std::size_t i = 1; i < samples.size(); ++i) {
    if (samples[i].freq <= samples[i - 1].freq) ordered = false;
  }
  if (!ordered) {
    std::vector<std::size_t> idx(samples.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t l, std::size_t r) { return samples[l].freq < samples[r].freq; });
    for (std::size_t i = 1; i < idx.size(); ++i) {
      if (samples[idx[i]].freq == samples[idx[i - 1]].freq) {
        const std::size_t row = std::max(rows[idx[i]], rows[idx[i - 1]]);
        throw Error(ErrorCode::kValidationError,
                    "line " + std::to_string(row) + ": duplicate frequency", row);
      }
    }
  }
  if (!ordered && warnings) warnings->push_back("frequencies not ascending; samples re-sorted");
  return Trace(std::move(samples), std::move(meta));
}

Trace ingest_trace(const std::filesystem::path& path, TraceMeta meta,
                   std::vector<std::string>* warnings) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open trace '" + path.string() + "'");
  return parse_trace_csv(in, std::move(meta), warnings);
}

void write_trace_csv(const Trace& trace, std::ostream& out) {
  out << kTraceHeader << '\n';
  for (const auto& s : trace.samples()) {
    out << format_double(s.freq) << ',' << format_double(s.s21.real()) << ','
        << format_double(s.s21.imag()) << '\n';
  }
}

void write_trace_csv(const Trace& trace, const std::filesystem::path& path) {
  std::ostringstream ss;
  write_trace_csv(trace, ss);
  write_file(path, ss.str());
}

std::filesystem::path Manifest::resolve(const ManifestRun& run) const {
  const std::filesystem::path p(run.trace_path);
  return p.is_absolute() || base_dir.empty() ? p : base_dir / p;
}

double Manifest::attenuation_db(const ManifestRun& run) const {
  if (run.attenuation_db) return *run.attenuation_db;
  if (default_attenuation_db) return *default_attenuation_db;
  throw Error(ErrorCode::kValidationError, "run '" + run.trace_path + "' has no attenuation_db");
}

double Manifest::temperature_k(const ManifestRun& run) const {
  if (run.temperature_k) return *run.temperature_k;
  if (default_temperature_k) return *default_temperature_k;
  return constants::kDefaultTemperature;
}

void validate(const Manifest& manifest) {
  std::set<std::string> seen;
  for (const auto& run : manifest.runs) {
    if (!seen.insert(run.trace_path).second) {
      throw Error(ErrorCode::kValidationError, "duplicate trace_path '" + run.trace_path + "'");
    }
    if (run.sample_id.empty() || run.resonator_id.empty()) {
      throw Error(ErrorCode::kValidationError, "run '" + run.trace_path + "' lacks sample/resonator id");
    }
    if (!std::isfinite(run.power_dbm)) {
      throw Error(ErrorCode::kValidationError, "run '" + run.trace_path + "' has non-finite power");
    }
    if (!(manifest.attenuation_db(run) >= 0.0)) {
      throw Error(ErrorCode::kValidationError, "run '" + run.trace_path + "' has negative attenuation");
    }
    if (!(manifest.temperature_k(run) > 0.0)) {
      throw Error(ErrorCode::kValidationError, "run '" + run.trace_path + "' needs temperature_k > 0");
    }
  }
}

Manifest parse_manifest(const std::string& json_text, std::filesystem::path base_dir) {
  const ordered_json j = parse_json(json_text);
  if (!j.is_object() || !j.contains("runs") || !j.at("runs").is_array()) {
    throw Error(ErrorCode::kValidationError, "manifest must be an object with a 'runs' array");
  }
  Manifest m;
  m.base_dir = std::move(base_dir);
  if (j.contains("defaults")) {
    const auto& d = j.at("defaults");
    m.default_attenuation_db = optional_number(d, "attenuation_db");
    m.default_temperature_k = optional_number(d, "temperature_k");
  }
  for (const auto& r : j.at("runs")) {
    ManifestRun run;
    run.trace_path = required<std::string>(r, "trace_path", "manifest run");
    run.sample_id = required<std::string>(r, "sample_id", "manifest run");
    run.resonator_id = required<std::string>(r, "resonator_id", "manifest run");
    run.power_dbm = required<double>(r, "power_dbm", "manifest run");
    run.attenuation_db = optional_number(r, "attenuation_db");
    run.temperature_k = optional_number(r, "temperature_k");
    m.runs.push_back(std::move(run));
  }
  validate(m);
  return m;
}

Manifest read_manifest(const std::filesystem::path& path) {
  return parse_manifest(read_file(path), path.parent_path());
}

void write_manifest(const Manifest& manifest, const std::filesystem::path& path) {
  ordered_json j;
  ordered_json defaults = ordered_json::object();
  if (manifest.default_attenuation_db) defaults["attenuation_db"] = *manifest.default_attenuation_db;
  if (manifest.default_temperature_k) defaults["temperature_k"] = *manifest.default_temperature_k;
  j["defaults"] = defaults;
  j["runs"] = ordered_json::array();
  for (const auto& run : manifest.runs) {
    ordered_json r;
    r["trace_path"] = run.trace_path;
    r["sample_id"] = run.sample_id;
    r["resonator_id"] = run.resonator_id;
    r["power_dbm"] = run.power_dbm;
    if (run.attenuation_db) r["attenuation_db"] = *run.attenuation_db;
    if (run.temperature_k) r["temperature_k"] = *run.temperature_k;
    j["runs"].push_back(std::move(r));
  }
  write_file(path, j.dump(2) + "\n");
}

namespace {

synth::SynthSpec parse_one_spec(const ordered_json& j) {
  const char* where = "synth spec";
  synth::SynthSpec s;
  const auto& res = j.at("res");
  s.res.fr = required<double>(res, "fr", "synth res");
  s.res.q_ext_mag = required<double>(res, "q_ext_mag", "synth res");
  s.res.phi0 = optional_or(res, "phi0", 0.0);
  s.res.q_loaded = optional_or(res, "q_loaded", 0.0);
  const auto& tls = j.at("tls");
  s.tls.f_delta_tls0 = required<double>(tls, "f_delta_tls0", "synth tls");
  s.tls.n_c = required<double>(tls, "n_c", "synth tls");
  s.tls.beta = required<double>(tls, "beta", "synth tls");
  s.tls.delta_other = required<double>(tls, "delta_other", "synth tls");
  s.tls.temperature = optional_or(tls, "temperature", constants::kDefaultTemperature);
  if (j.contains("env")) {
    const auto& env = j.at("env");
    s.env.amp = optional_or(env, "amp", 1.0);
    s.env.phase0 = optional_or(env, "phase0", 0.0);
    s.env.delay = optional_or(env, "delay", 0.0);
  }
  s.powers_dbm = required<std::vector<double>>(j, "powers_dbm", where);
  s.attenuation_db = required<double>(j, "attenuation_db", where);
  s.points_per_trace = optional_or<std::size_t>(j, "points_per_trace", s.points_per_trace);
  s.span_linewidths = optional_or(j, "span_linewidths", s.span_linewidths);
  s.noise_sigma = optional_or(j, "noise_sigma", s.noise_sigma);
  s.seed = optional_or<std::uint64_t>(j, "seed", s.seed);
  s.sample_id = optional_or<std::string>(j, "sample_id", s.sample_id);
  s.resonator_id = optional_or<std::string>(j, "resonator_id", s.resonator_id);
  synth::validate(s);
  return s;
}

}  // namespace

std::vector<synth::SynthSpec> parse_synth_specs(const std::string& json_text) {
  const ordered_json j = parse_json(json_text);
  std::vector<synth::SynthSpec> out;
  try {
    if (j.contains("resonators")) {
      for (const auto& r : j.at("resonators")) out.push_back(parse_one_spec(r));
    } else {
      out.push_back(parse_one_spec(j));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kValidationError, std::string("synth spec: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kInvalidArgument) throw Error(ErrorCode::kValidationError, e.what());
    throw;
  }
  return out;
}

std::vector<synth::SynthSpec> read_synth_specs(const std::filesystem::path& path) {
  return parse_synth_specs(read_file(path));
}

SynthOutput write_synth_dataset(const std::vector<synth::SynthSpec>& specs,
                                const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir / "traces", ec);
  if (ec) throw Error(ErrorCode::kIoError, "cannot create '" + out_dir.string() + "': " + ec.message());

  Manifest manifest;
  manifest.base_dir = out_dir;
  ordered_json truth = ordered_json::array();
  SynthOutput out;
  for (const auto& spec : specs) {
    const auto sweep = synth::synth_power_sweep(spec);
    ordered_json entry;
    entry["sample_id"] = spec.sample_id;
    entry["resonator_id"] = spec.resonator_id;
    entry["fr"] = spec.res.fr;
    entry["q_ext_mag"] = spec.res.q_ext_mag;
    entry["phi0"] = spec.res.phi0;
    entry["f_delta_tls0"] = spec.tls.f_delta_tls0;
    entry["n_c"] = spec.tls.n_c;
    entry["beta"] = spec.tls.beta;
    entry["delta_other"] = spec.tls.delta_other;
    entry["temperature"] = spec.tls.temperature;
    entry["amp"] = spec.env.amp;
    entry["phase0"] = spec.env.phase0;
    entry["delay"] = spec.env.delay;
    entry["traces"] = ordered_json::array();
    for (std::size_t i = 0; i < sweep.size(); ++i) {
      const std::string rel = "traces/" + safe_name(spec.sample_id) + "__" +
                              safe_name(spec.resonator_id) + "__p" + std::to_string(i) + ".csv";
      write_trace_csv(sweep[i].trace, out_dir / rel);
      ManifestRun run;
      run.trace_path = rel;
      run.sample_id = spec.sample_id;
      run.resonator_id = spec.resonator_id;
      run.power_dbm = spec.powers_dbm[i];
      run.attenuation_db = spec.attenuation_db;
      run.temperature_k = spec.tls.temperature > 0.0 ? spec.tls.temperature : constants::kDefaultTemperature;
      manifest.runs.push_back(std::move(run));
      ordered_json t;
      t["trace_path"] = rel;
      t["power_dbm"] = spec.powers_dbm[i];
      t["power_chip_w"] = sweep[i].power_chip_w;
      t["n_mean"] = sweep[i].n_mean;
      t["q_loaded"] = sweep[i].truth.q_loaded;
      t["qi"] = sweep[i].qi;
      entry["traces"].push_back(std::move(t));
      ++out.n_traces;
    }
    truth.push_back(std::move(entry));
  }
  validate(manifest);
  out.manifest_path = out_dir / "manifest.json";
  out.truth_path = out_dir / "ground_truth.json";
  write_manifest(manifest, out.manifest_path);
  write_file(out.truth_path, truth.dump(2) + "\n");
  return out;
}

}  // namespace resq::io
