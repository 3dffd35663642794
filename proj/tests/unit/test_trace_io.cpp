#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "fixtures.hpp"
#include "resq/error.hpp"
#include "resq/trace_io.hpp"

using namespace resq;
using namespace resq::io;

namespace {

std::string rows(int n, double f0 = 4.4e9) {
  std::ostringstream s;
  for (int k = 0; k < n; ++k) s << format_double(f0 + 1e3 * k) << ",0.5,0.0\n";
  return s.str();
}

Error parse_error(const std::string& text) {
  std::istringstream in(text);
  try {
    parse_trace_csv(in);
  } catch (const Error& e) {
    return e;
  }
  ADD_FAILURE() << "no exception";
  return Error(ErrorCode::kInvalidArgument, "");
}

}  // namespace

TEST(TraceCsv, TooFewRows) {
  const Error e = parse_error(std::string(kTraceHeader) + "\n" + rows(3));
  EXPECT_EQ(e.code(), ErrorCode::kValidationError);
}

TEST(TraceCsv, FieldMapping) {
  std::istringstream in(std::string(kTraceHeader) + "\n4.4e9,0.5,0.0\n" + rows(15, 4.5e9));
  const Trace t = parse_trace_csv(in);
  EXPECT_EQ(t.samples().front().freq, 4.4e9);
  EXPECT_EQ(t.samples().front().s21, Complex(0.5, 0.0));
}

TEST(TraceCsv, NanNamesRow) {
  const std::string text = std::string(kTraceHeader) + "\n" + rows(5) + "4.41e9,NaN,0.1\n" + rows(12, 4.5e9);
  const Error e = parse_error(text);
  EXPECT_EQ(e.code(), ErrorCode::kValidationError);
  EXPECT_EQ(e.line(), 7u);
  EXPECT_NE(std::string(e.what()).find("line 7"), std::string::npos);
}

TEST(TraceCsv, MalformedRow) {
  const std::string text = std::string(kTraceHeader) + "\n" + rows(4) + "4.41e9,abc,0.1\n" + rows(12, 4.5e9);
  const Error e = parse_error(text);
  EXPECT_EQ(e.code(), ErrorCode::kParseError);
  EXPECT_EQ(e.line(), 6u);
  const Error e2 = parse_error(std::string(kTraceHeader) + "\n" + rows(3) + "1,2\n");
  EXPECT_EQ(e2.code(), ErrorCode::kParseError);
  EXPECT_EQ(e2.line(), 5u);
}

TEST(TraceCsv, BadHeader) {
  const Error e = parse_error("freq,re,im\n" + rows(20));
  EXPECT_EQ(e.code(), ErrorCode::kParseError);
  EXPECT_EQ(e.line(), 1u);
  EXPECT_EQ(parse_error("").code(), ErrorCode::kParseError);
}

TEST(TraceCsv, DuplicateFrequency) {
  const Error e = parse_error(std::string(kTraceHeader) + "\n" + rows(16) + rows(1));
  EXPECT_EQ(e.code(), ErrorCode::kValidationError);
  EXPECT_EQ(e.line(), 18u);
}

TEST(TraceCsv, ResortsWithWarning) {
  std::string body;
  for (int k = 19; k >= 0; --k) body += format_double(4.4e9 + 1e3 * k) + ",0.5," + std::to_string(k) + "\n";
  std::istringstream in(std::string(kTraceHeader) + "\n" + body);
  std::vector<std::string> warnings;
  const Trace t = parse_trace_csv(in, {}, &warnings);
  EXPECT_EQ(warnings.size(), 1u);
  for (std::size_t k = 0; k < t.size(); ++k) EXPECT_EQ(t.samples()[k].s21.imag(), double(k));
}

TEST(TraceCsv, RoundTripIsExact) {
  const Trace t = resq::testing::model_trace({4.4e9, 3e5, 6e5, 0.2}, {0.7, 1.0, 20e-9}, 101, 10.0, 1e-3, 4);
  std::ostringstream out;
  write_trace_csv(t, out);
  std::istringstream in(out.str());
  EXPECT_EQ(parse_trace_csv(in), t);
  std::istringstream in2(out.str());
  std::ostringstream again;
  write_trace_csv(parse_trace_csv(in2), again);
  EXPECT_EQ(again.str(), out.str());
}

TEST(TraceCsv, MissingFile) {
  try {
    ingest_trace("/nonexistent/trace.csv");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kIoError);
  }
}

TEST(FormatDouble, ShortestRoundTrip) {
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_EQ(format_double(4.4e9), "4.4e+09");
  EXPECT_EQ(format_double(1e-7), "1e-07");
  for (double v : {1.0 / 3.0, 2.718281828459045, -1e-300, 6.02214076e23})
    EXPECT_EQ(std::stod(format_double(v)), v);
}

TEST(Manifest, ParseAndDefaults) {
  const std::string text = R"({
    "defaults": {"attenuation_db": 70, "temperature_k": 0.012},
    "runs": [
      {"trace_path": "a.csv", "sample_id": "s", "resonator_id": "r1", "power_dbm": -30},
      {"trace_path": "/abs/b.csv", "sample_id": "s", "resonator_id": "r1", "power_dbm": -40,
       "attenuation_db": 60, "temperature_k": 0.02}
    ]})";
  const Manifest m = parse_manifest(text, "/data");
  ASSERT_EQ(m.runs.size(), 2u);
  EXPECT_EQ(m.attenuation_db(m.runs[0]), 70.0);
  EXPECT_EQ(m.temperature_k(m.runs[0]), 0.012);
  EXPECT_EQ(m.attenuation_db(m.runs[1]), 60.0);
  EXPECT_EQ(m.temperature_k(m.runs[1]), 0.02);
  EXPECT_EQ(m.resolve(m.runs[0]), std::filesystem::path("/data/a.csv"));
  EXPECT_EQ(m.resolve(m.runs[1]), std::filesystem::path("/abs/b.csv"));
}

TEST(Manifest, Validation) {
  auto code = [](const std::string& text) {
    try {
      parse_manifest(text);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::kInvalidArgument;
  };
  const std::string run = R"({"trace_path": "a.csv", "sample_id": "s", "resonator_id": "r", "power_dbm": -30)";
  EXPECT_EQ(code(R"({"runs": [)" + run + "}]}"), ErrorCode::kValidationError);  // no attenuation
  EXPECT_EQ(code(R"({"runs": [)" + run + R"(, "attenuation_db": -1}]})"), ErrorCode::kValidationError);
  EXPECT_EQ(code(R"({"defaults": {"attenuation_db": 1}, "runs": [)" + run + "}," + run + "}]}"),
            ErrorCode::kValidationError);
  EXPECT_EQ(code(R"({"defaults": {"attenuation_db": 1, "temperature_k": 0}, "runs": [)" + run + "}]}"),
            ErrorCode::kValidationError);
  EXPECT_EQ(code("{not json"), ErrorCode::kParseError);
  EXPECT_EQ(code(R"({"runs": [{"trace_path": "a.csv"}]})"), ErrorCode::kValidationError);
}

TEST(Manifest, WriteReadRoundTrip) {
  const auto dir = resq::testing::scratch_dir("manifest");
  Manifest m;
  m.default_attenuation_db = 70.0;
  m.runs.push_back({"t/a.csv", "s1", "r1", -30.5, std::nullopt, 0.02});
  m.runs.push_back({"t/b.csv", "s1", "r2", -40.0, 65.0, std::nullopt});
  write_manifest(m, dir / "manifest.json");
  const Manifest back = read_manifest(dir / "manifest.json");
  ASSERT_EQ(back.runs.size(), 2u);
  EXPECT_EQ(back.runs[0].power_dbm, -30.5);
  EXPECT_EQ(back.runs[0].temperature_k, 0.02);
  EXPECT_EQ(back.runs[1].attenuation_db, 65.0);
  EXPECT_EQ(back.resolve(back.runs[0]), dir / "t/a.csv");
}

TEST(SynthSpecs, SingleAndList) {
  const std::string one = R"({"res": {"fr": 4.4e9, "q_ext_mag": 1e6},
    "tls": {"f_delta_tls0": 8.7e-7, "n_c": 0.48, "beta": 0.22, "delta_other": 2.3e-7},
    "powers_dbm": [-90, -60], "attenuation_db": 70, "seed": 3, "sample_id": "s1"})";
  const auto a = parse_synth_specs(one);
  ASSERT_EQ(a.size(), 1u);
  EXPECT_EQ(a[0].powers_dbm, (std::vector<double>{-90, -60}));
  EXPECT_EQ(a[0].seed, 3u);
  EXPECT_EQ(a[0].sample_id, "s1");
  EXPECT_EQ(a[0].tls.temperature, constants::kDefaultTemperature);
  const auto b = parse_synth_specs(R"({"resonators": [)" + one + "," + one + "]}");
  EXPECT_EQ(b.size(), 2u);
  EXPECT_THROW(parse_synth_specs(R"({"res": {"fr": 4.4e9}})"), Error);
}

TEST(SynthDataset, WritesIngestibleFiles) {
  const auto dir = resq::testing::scratch_dir("dataset");
  auto spec = resq::testing::sweep_spec(resq::testing::reference("1", 1.0), 1e-3, 7, 4);
  const SynthOutput out = write_synth_dataset({spec}, dir);
  EXPECT_EQ(out.n_traces, 4u);
  EXPECT_TRUE(std::filesystem::exists(out.truth_path));
  const Manifest m = read_manifest(out.manifest_path);
  ASSERT_EQ(m.runs.size(), 4u);
  const Trace t = ingest_trace(m.resolve(m.runs[2]));
  EXPECT_EQ(t.samples(), synth::synth_trace(spec, 2).trace.samples());
  EXPECT_EQ(m.attenuation_db(m.runs[2]), spec.attenuation_db);
  EXPECT_EQ(m.runs[2].power_dbm, spec.powers_dbm[2]);
}
