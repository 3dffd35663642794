#pragma once

#include "resq/model.hpp"

namespace resq::calibration {

/// One point of a power sweep feeding the TLS fit.
struct PowerPoint {
  double n_mean = 0.0;
  double qi = 0.0;
  double qi_sigma = 0.0;
  double power_chip_w = 0.0;

  friend bool operator==(const PowerPoint&, const PowerPoint&) = default;
};

/// 1e-3 * 10^((p_dbm - attenuation_db)/10).
double dbm_to_watts(double p_dbm, double attenuation_db);

/// Mean circulating photon number for a drive at resonance:
///   <n> = 2 / (hbar w0^2) * Ql^2 / Qc * P,  Qc = |Qe| / cos(phi0),  w0 = 2 pi fr.
/// Throws NonPhysical when cos(phi0) <= 0.
double photon_number(double power_chip_w, const ResonanceParams& res);

}  // namespace resq::calibration
