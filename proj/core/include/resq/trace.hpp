#pragma once

#include <string>
#include <vector>

#include "resq/model.hpp"

namespace resq {

struct TraceMeta {
  double power_dbm = 0.0;       // applied at the instrument
  double attenuation_db = 0.0;  // total line attenuation to the chip
  double temperature_k = constants::kDefaultTemperature;
  std::string sample_id;
  std::string resonator_id;

  friend bool operator==(const TraceMeta&, const TraceMeta&) = default;
};

/// One frequency sweep of complex S21. Construction sorts samples by
/// frequency and enforces: at least 16 samples, strictly increasing
/// positive frequencies, finite values (Error kValidationError otherwise).
class Trace {
 public:
  static constexpr std::size_t kMinSamples = 16;

  Trace() = default;
  explicit Trace(std::vector<ComplexSample> samples, TraceMeta meta = {});

  const std::vector<ComplexSample>& samples() const noexcept { return samples_; }
  const TraceMeta& meta() const noexcept { return meta_; }
  std::size_t size() const noexcept { return samples_.size(); }
  double span() const noexcept { return samples_.back().freq - samples_.front().freq; }

  friend bool operator==(const Trace&, const Trace&) = default;

 private:
  std::vector<ComplexSample> samples_;
  TraceMeta meta_;
};

}  // namespace resq
