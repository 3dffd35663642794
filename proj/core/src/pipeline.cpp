#include "resq/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <map>
#include <thread>

#include "resq/circlefit.hpp"

namespace resq::pipeline {

std::size_t SampleStats::n_ok() const {
  return static_cast<std::size_t>(
      std::count_if(resonators.begin(), resonators.end(), [](const auto& r) { return r.ok; }));
}

unsigned threads_from_env() {
  unsigned n = 0;
  if (const char* env = std::getenv("RESQ_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && v > 0) n = static_cast<unsigned>(v);
  }
  if (n == 0) n = std::max(1u, std::thread::hardware_concurrency());
  return n;
}

ResonatorResult process_resonator(const io::Manifest& manifest,
                                  const std::vector<const io::ManifestRun*>& runs, double ref_n) {
  ResonatorResult out;
  out.resonator_id = runs.front()->resonator_id;
  const io::ManifestRun* current = nullptr;
  try {
    double fr_sum = 0.0;
    double temperature = 0.0;
    for (const auto* run : runs) {
      current = run;
      TraceMeta meta;
      meta.power_dbm = run->power_dbm;
      meta.attenuation_db = manifest.attenuation_db(*run);
      meta.temperature_k = manifest.temperature_k(*run);
      meta.sample_id = run->sample_id;
      meta.resonator_id = run->resonator_id;
      const Trace trace = io::ingest_trace(manifest.resolve(*run), meta);
      const auto report = circlefit::extract(trace);
      calibration::PowerPoint p;
      p.power_chip_w = calibration::dbm_to_watts(meta.power_dbm, meta.attenuation_db);
      p.n_mean = calibration::photon_number(p.power_chip_w, report.res());
      p.qi = report.qi();
      p.qi_sigma = report.qi_sigma();
      out.points.push_back(p);
      fr_sum += report.res().fr;
      temperature += meta.temperature_k;
    }
    current = nullptr;
    std::sort(out.points.begin(), out.points.end(),
              [](const auto& a, const auto& b) { return a.n_mean < b.n_mean; });
    out.fr = fr_sum / static_cast<double>(runs.size());
    out.temperature_k = temperature / static_cast<double>(runs.size());
    out.fit = tls::fit_tls(out.points, out.fr, out.temperature_k);
    out.qi_ref = tls::qi_at(ref_n, *out.fit);
    out.ok = true;
  } catch (const Error& e) {
    out.ok = false;
    out.fit.reset();
    out.error_code = e.code();
    out.error = current ? current->trace_path + ": " + e.what() : std::string(e.what());
  } catch (const std::exception& e) {
    out.ok = false;
    out.fit.reset();
    out.error_code = ErrorCode::kDidNotConverge;
    out.error = e.what();
  }
  return out;
}

SampleStats summarize(std::string sample_id, std::vector<ResonatorResult> resonators, double ref_n) {
  SampleStats s;
  s.sample_id = std::move(sample_id);
  s.ref_n = ref_n;
  s.resonators = std::move(resonators);
  std::vector<double> fdt, beta, other, qi;
  for (const auto& r : s.resonators) {
    if (!r.ok) continue;
    fdt.push_back(r.fit->params.f_delta_tls0);
    beta.push_back(r.fit->params.beta);
    other.push_back(r.fit->params.delta_other);
    qi.push_back(r.qi_ref);
  }
  if (fdt.empty()) {
    s.error = "no resonator of this sample was fitted successfully";
    return s;
  }
  SampleSummary sum;
  sum.f_delta_tls0 = stats::quartiles(fdt);
  sum.f_delta_tls0_mean = stats::mean(fdt);
  sum.beta_mean = stats::mean(beta);
  sum.beta_median = stats::median(beta);
  sum.delta_other_mean = stats::mean(other);
  sum.delta_other_median = stats::median(other);
  sum.qi_ref_mean = stats::mean(qi);
  sum.qi_ref_median = stats::median(qi);
  s.summary = sum;
  return s;
}

std::vector<SampleStats> run_pipeline(const io::Manifest& manifest, const Options& options) {
  io::validate(manifest);
  // (sample, resonator) -> runs, ordered by power then path.
  std::map<std::pair<std::string, std::string>, std::vector<const io::ManifestRun*>> groups;
  for (const auto& run : manifest.runs) groups[{run.sample_id, run.resonator_id}].push_back(&run);
  std::vector<std::pair<std::string, std::vector<const io::ManifestRun*>>> jobs;
  for (auto& [key, runs] : groups) {
    std::sort(runs.begin(), runs.end(), [](const auto* a, const auto* b) {
      if (a->power_dbm != b->power_dbm) return a->power_dbm < b->power_dbm;
      return a->trace_path < b->trace_path;
    });
    jobs.emplace_back(key.first, runs);
  }

  std::vector<ResonatorResult> results(jobs.size());
  const unsigned n_threads =
      std::min<unsigned>(options.threads ? options.threads : threads_from_env(),
                         static_cast<unsigned>(std::max<std::size_t>(jobs.size(), 1)));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++)
      results[i] = process_resonator(manifest, jobs[i].second, options.ref_n);
  };
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  }

  std::vector<SampleStats> out;
  std::size_t i = 0;
  while (i < jobs.size()) {
    const std::string sample = jobs[i].first;
    std::vector<ResonatorResult> rs;
    for (; i < jobs.size() && jobs[i].first == sample; ++i) rs.push_back(std::move(results[i]));
    out.push_back(summarize(sample, std::move(rs), options.ref_n));
  }
  return out;
}

}  // namespace resq::pipeline
