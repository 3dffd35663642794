#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "fixtures.hpp"
#include "resq/error.hpp"
#include "resq/pipeline.hpp"
#include "resq/report.hpp"

using namespace resq;
using namespace resq::report;
using resq::testing::reference;

namespace {

const std::vector<pipeline::SampleStats>& sample_stats() {
  static const auto stats = [] {
    io::Manifest m = resq::testing::synthetic_manifest("report_src", reference("1", 1.0), 2);
    m.runs.back().trace_path = "missing.csv";
    return pipeline::run_pipeline(m);
  }();
  return stats;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string f;
  while (std::getline(ss, f, ',')) out.push_back(f);
  return out;
}

}  // namespace

TEST(Report, SamplesCsvRow) {
  std::istringstream in(samples_csv(sample_stats()));
  std::string header, row;
  std::getline(in, header);
  std::getline(in, row);
  const auto h = split(header);
  const auto v = split(row);
  const auto col = std::find(h.begin(), h.end(), "f_delta_tls0_median") - h.begin();
  ASSERT_LT(static_cast<std::size_t>(col), v.size());
  EXPECT_NEAR(std::stod(v[col]), 8.7e-7, 0.05 * 8.7e-7);
  EXPECT_EQ(v[0], "1");
}

TEST(Report, ResonatorsCsvListsFailure) {
  const std::string csv = resonators_csv(sample_stats());
  EXPECT_NE(csv.find(",false,"), std::string::npos);
  EXPECT_NE(csv.find("missing.csv"), std::string::npos);
}

TEST(Report, JsonRoundTrip) {
  const auto& stats = sample_stats();
  const auto back = from_json(to_json(stats));
  EXPECT_EQ(back, stats);
  EXPECT_EQ(to_json(back), to_json(stats));
}

TEST(Report, JsonRoundTripNonFinite) {
  auto stats = sample_stats();
  stats[0].resonators[0].fit->sigmas.n_c = std::numeric_limits<double>::infinity();
  EXPECT_EQ(from_json(to_json(stats)), stats);
}

TEST(Report, EmitIsByteStable) {
  const auto a = resq::testing::scratch_dir("report_a");
  const auto b = resq::testing::scratch_dir("report_b");
  for (auto f : parse_formats("csv,json,svg")) {
    emit_report(sample_stats(), f, a);
    emit_report(sample_stats(), f, b);
  }
  for (const char* name : {kSamplesCsv, kResonatorsCsv, kReportJson, kQiSvg, kBoxSvg}) {
    const std::string x = slurp(a / name);
    EXPECT_FALSE(x.empty()) << name;
    EXPECT_EQ(x, slurp(b / name)) << name;
  }
  EXPECT_EQ(read_report(a / kReportJson), sample_stats());
}

TEST(Report, SvgContent) {
  const std::string qi = svg_qi_vs_n(sample_stats());
  EXPECT_EQ(qi.rfind("<svg", 0) == 0 || qi.rfind("<?xml", 0) == 0, true);
  EXPECT_NE(qi.find("<circle"), std::string::npos);
  EXPECT_NE(qi.find("<polyline"), std::string::npos);
  EXPECT_NE(qi.find("</svg>"), std::string::npos);
  const std::string box = svg_f_delta_box(sample_stats());
  EXPECT_NE(box.find("<rect"), std::string::npos);
  EXPECT_NE(box.find("</svg>"), std::string::npos);
}

TEST(Report, Errors) {
  EXPECT_THROW(emit_report({}, Format::kCsv, resq::testing::scratch_dir("report_empty")), Error);
  EXPECT_THROW(parse_formats("csv,xml"), Error);
  const auto dir = resq::testing::scratch_dir("report_io");
  std::ofstream(dir / "file") << "x";
  try {
    emit_report(sample_stats(), Format::kJson, dir / "file" / "sub");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kIoError);
  }
}
