#include "resq/report.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <nlohmann/json.hpp>
#include <sstream>

#include "resq/error.hpp"

namespace resq::report {

using nlohmann::ordered_json;

namespace {

ordered_json num(double v) { return std::isfinite(v) ? ordered_json(v) : ordered_json(nullptr); }

double get_num(const ordered_json& j, const char* key) {
  const auto& v = j.at(key);
  return v.is_null() ? std::numeric_limits<double>::infinity() : v.get<double>();
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string join(const std::vector<std::string>& v, char sep) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += sep;
    out += v[i];
  }
  return out;
}

std::optional<ErrorCode> code_from_string(const std::string& s) {
  for (auto c : {ErrorCode::kInvalidArgument, ErrorCode::kNonPhysical, ErrorCode::kDegenerate,
                 ErrorCode::kInsufficientSpan, ErrorCode::kDidNotConverge,
                 ErrorCode::kFixedPointDiverged, ErrorCode::kEmptyInput, ErrorCode::kParseError,
                 ErrorCode::kValidationError, ErrorCode::kIoError}) {
    if (to_string(c) == s) return c;
  }
  return std::nullopt;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw Error(ErrorCode::kIoError, "write to '" + path.string() + "' failed");
}

}  // namespace

std::vector<Format> parse_formats(std::string_view list) {
  std::vector<Format> out;
  std::size_t pos = 0;
  while (pos <= list.size()) {
    const auto end = std::min(list.find(',', pos), list.size());
    const auto item = list.substr(pos, end - pos);
    Format f;
    if (item == "csv") f = Format::kCsv;
    else if (item == "json") f = Format::kJson;
    else if (item == "svg") f = Format::kSvg;
    else throw Error(ErrorCode::kValidationError, "unknown report format '" + std::string(item) + "'");
    if (std::find(out.begin(), out.end(), f) == out.end()) out.push_back(f);
    pos = end + 1;
  }
  return out;
}

std::string samples_csv(const std::vector<pipeline::SampleStats>& stats) {
  using io::format_double;
  std::ostringstream os;
  os << "sample_id,ref_n,n_resonators,n_ok,n_failed,qi_ref_mean,qi_ref_median,"
        "f_delta_tls0_mean,f_delta_tls0_min,f_delta_tls0_q1,f_delta_tls0_median,"
        "f_delta_tls0_q3,f_delta_tls0_max,beta_mean,beta_median,delta_other_mean,"
        "delta_other_median,flags,error\n";
  for (const auto& s : stats) {
    std::vector<std::string> flags;
    for (const auto& r : s.resonators) {
      if (!r.ok) continue;
      for (const auto& f : r.fit->identifiability.names()) flags.push_back(r.resonator_id + ":" + f);
    }
    os << csv_field(s.sample_id) << ',' << format_double(s.ref_n) << ',' << s.resonators.size()
       << ',' << s.n_ok() << ',' << s.n_failed() << ',';
    if (s.summary) {
      const auto& m = *s.summary;
      for (double v : {m.qi_ref_mean, m.qi_ref_median, m.f_delta_tls0_mean, m.f_delta_tls0.min,
                       m.f_delta_tls0.q1, m.f_delta_tls0.median, m.f_delta_tls0.q3,
                       m.f_delta_tls0.max, m.beta_mean, m.beta_median, m.delta_other_mean,
                       m.delta_other_median}) {
        os << format_double(v) << ',';
      }
    } else {
      os << ",,,,,,,,,,,,";
    }
    os << csv_field(join(flags, ';')) << ',' << csv_field(s.error) << '\n';
  }
  return os.str();
}

std::string resonators_csv(const std::vector<pipeline::SampleStats>& stats) {
  using io::format_double;
  std::ostringstream os;
  os << "sample_id,resonator_id,ok,fr_hz,n_points,qi_ref,f_delta_tls0,f_delta_tls0_sigma,n_c,"
        "n_c_sigma,beta,beta_sigma,delta_other,delta_other_sigma,chi2_reduced,flags,error\n";
  for (const auto& s : stats) {
    for (const auto& r : s.resonators) {
      os << csv_field(s.sample_id) << ',' << csv_field(r.resonator_id) << ','
         << (r.ok ? "true" : "false") << ',';
      if (r.ok) {
        const auto& p = r.fit->params;
        const auto& e = r.fit->sigmas;
        os << format_double(r.fr) << ',' << r.points.size() << ',' << format_double(r.qi_ref);
        for (double v : {p.f_delta_tls0, e.f_delta_tls0, p.n_c, e.n_c, p.beta, e.beta,
                         p.delta_other, e.delta_other, r.fit->chi2_reduced}) {
          os << ',' << format_double(v);
        }
        os << ',' << csv_field(join(r.fit->identifiability.names(), ';')) << ",\n";
      } else {
        os << ",,,,,,,,,,,,,," << csv_field(r.error) << '\n';
      }
    }
  }
  return os.str();
}

std::string to_json(const std::vector<pipeline::SampleStats>& stats) {
  ordered_json root;
  root["format"] = "resq-report";
  root["version"] = 1;
  root["samples"] = ordered_json::array();
  for (const auto& s : stats) {
    ordered_json js;
    js["sample_id"] = s.sample_id;
    js["ref_n"] = s.ref_n;
    js["error"] = s.error;
    if (s.summary) {
      const auto& m = *s.summary;
      js["summary"] = {
          {"f_delta_tls0_box",
           {{"min", m.f_delta_tls0.min},
            {"q1", m.f_delta_tls0.q1},
            {"median", m.f_delta_tls0.median},
            {"q3", m.f_delta_tls0.q3},
            {"max", m.f_delta_tls0.max}}},
          {"f_delta_tls0_mean", m.f_delta_tls0_mean},
          {"beta_mean", m.beta_mean},
          {"beta_median", m.beta_median},
          {"delta_other_mean", m.delta_other_mean},
          {"delta_other_median", m.delta_other_median},
          {"qi_ref_mean", m.qi_ref_mean},
          {"qi_ref_median", m.qi_ref_median},
      };
    } else {
      js["summary"] = nullptr;
    }
    js["resonators"] = ordered_json::array();
    for (const auto& r : s.resonators) {
      ordered_json jr;
      jr["resonator_id"] = r.resonator_id;
      jr["ok"] = r.ok;
      jr["error"] = r.error;
      jr["error_code"] = r.error_code ? ordered_json(std::string(to_string(*r.error_code)))
                                      : ordered_json(nullptr);
      jr["fr_hz"] = num(r.fr);
      jr["temperature_k"] = num(r.temperature_k);
      jr["qi_ref"] = num(r.qi_ref);
      jr["points"] = ordered_json::array();
      for (const auto& p : r.points) {
        jr["points"].push_back({{"n_mean", num(p.n_mean)},
                                {"qi", num(p.qi)},
                                {"qi_sigma", num(p.qi_sigma)},
                                {"power_chip_w", num(p.power_chip_w)}});
      }
      if (r.fit) {
        const auto& f = *r.fit;
        jr["fit"] = {
            {"f_delta_tls0", num(f.params.f_delta_tls0)},
            {"n_c", num(f.params.n_c)},
            {"beta", num(f.params.beta)},
            {"delta_other", num(f.params.delta_other)},
            {"omega0", num(f.params.omega0)},
            {"temperature", num(f.params.temperature)},
            {"sigma_f_delta_tls0", num(f.sigmas.f_delta_tls0)},
            {"sigma_n_c", num(f.sigmas.n_c)},
            {"sigma_beta", num(f.sigmas.beta)},
            {"sigma_delta_other", num(f.sigmas.delta_other)},
            {"chi2_reduced", num(f.chi2_reduced)},
            {"flags", f.identifiability.names()},
        };
      } else {
        jr["fit"] = nullptr;
      }
      js["resonators"].push_back(std::move(jr));
    }
    root["samples"].push_back(std::move(js));
  }
  return root.dump(2) + "\n";
}

std::vector<pipeline::SampleStats> from_json(const std::string& text) {
  std::vector<pipeline::SampleStats> out;
  try {
    const auto root = ordered_json::parse(text);
    if (root.value("format", std::string()) != "resq-report")
      throw Error(ErrorCode::kParseError, "not a resq report");
    for (const auto& js : root.at("samples")) {
      pipeline::SampleStats s;
      s.sample_id = js.at("sample_id").get<std::string>();
      s.ref_n = js.at("ref_n").get<double>();
      s.error = js.at("error").get<std::string>();
      if (!js.at("summary").is_null()) {
        const auto& m = js.at("summary");
        const auto& b = m.at("f_delta_tls0_box");
        pipeline::SampleSummary sum;
        sum.f_delta_tls0 = {b.at("min").get<double>(), b.at("q1").get<double>(),
                            b.at("median").get<double>(), b.at("q3").get<double>(),
                            b.at("max").get<double>()};
        sum.f_delta_tls0_mean = m.at("f_delta_tls0_mean").get<double>();
        sum.beta_mean = m.at("beta_mean").get<double>();
        sum.beta_median = m.at("beta_median").get<double>();
        sum.delta_other_mean = m.at("delta_other_mean").get<double>();
        sum.delta_other_median = m.at("delta_other_median").get<double>();
        sum.qi_ref_mean = m.at("qi_ref_mean").get<double>();
        sum.qi_ref_median = m.at("qi_ref_median").get<double>();
        s.summary = sum;
      }
      for (const auto& jr : js.at("resonators")) {
        pipeline::ResonatorResult r;
        r.resonator_id = jr.at("resonator_id").get<std::string>();
        r.ok = jr.at("ok").get<bool>();
        r.error = jr.at("error").get<std::string>();
        if (!jr.at("error_code").is_null())
          r.error_code = code_from_string(jr.at("error_code").get<std::string>());
        r.fr = get_num(jr, "fr_hz");
        r.temperature_k = get_num(jr, "temperature_k");
        r.qi_ref = get_num(jr, "qi_ref");
        for (const auto& jp : jr.at("points")) {
          r.points.push_back({get_num(jp, "n_mean"), get_num(jp, "qi"), get_num(jp, "qi_sigma"),
                              get_num(jp, "power_chip_w")});
        }
        if (!jr.at("fit").is_null()) {
          const auto& jf = jr.at("fit");
          tls::TlsFitResult f;
          f.params.f_delta_tls0 = get_num(jf, "f_delta_tls0");
          f.params.n_c = get_num(jf, "n_c");
          f.params.beta = get_num(jf, "beta");
          f.params.delta_other = get_num(jf, "delta_other");
          f.params.omega0 = get_num(jf, "omega0");
          f.params.temperature = get_num(jf, "temperature");
          f.sigmas.f_delta_tls0 = get_num(jf, "sigma_f_delta_tls0");
          f.sigmas.n_c = get_num(jf, "sigma_n_c");
          f.sigmas.beta = get_num(jf, "sigma_beta");
          f.sigmas.delta_other = get_num(jf, "sigma_delta_other");
          f.chi2_reduced = get_num(jf, "chi2_reduced");
          const auto names = jf.at("flags").get<std::vector<std::string>>();
          f.identifiability = tls::IdentifiabilityFlags::from_names(names);
          r.fit = f;
        }
        s.resonators.push_back(std::move(r));
      }
      out.push_back(std::move(s));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParseError, std::string("report JSON: ") + e.what());
  }
  return out;
}

std::vector<pipeline::SampleStats> read_report(const std::filesystem::path& json_path) {
  std::ifstream in(json_path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open '" + json_path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

void emit_report(const std::vector<pipeline::SampleStats>& stats, Format format,
                 const std::filesystem::path& out_dir) {
  if (stats.empty()) throw Error(ErrorCode::kInvalidArgument, "nothing to report");
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw Error(ErrorCode::kIoError, "cannot create '" + out_dir.string() + "': " + ec.message());
  switch (format) {
    case Format::kCsv:
      write_text(out_dir / kSamplesCsv, samples_csv(stats));
      write_text(out_dir / kResonatorsCsv, resonators_csv(stats));
      break;
    case Format::kJson:
      write_text(out_dir / kReportJson, to_json(stats));
      break;
    case Format::kSvg:
      write_text(out_dir / kQiSvg, svg_qi_vs_n(stats));
      write_text(out_dir / kBoxSvg, svg_f_delta_box(stats));
      break;
  }
}

}  // namespace resq::report
