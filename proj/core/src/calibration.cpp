#include "resq/calibration.hpp"

#include <cmath>

#include "resq/error.hpp"

namespace resq::calibration {

double dbm_to_watts(double p_dbm, double attenuation_db) {
  if (!(attenuation_db >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "attenuation must be >= 0 dB");
  return 1e-3 * std::pow(10.0, (p_dbm - attenuation_db) / 10.0);
}

double photon_number(double power_chip_w, const ResonanceParams& res) {
  if (!(power_chip_w > 0.0)) throw Error(ErrorCode::kInvalidArgument, "chip power must be positive");
  const double qc = res.q_coupling();
  const double omega = angular(res.fr);
  return 2.0 / (constants::kHbar * omega * omega) * (res.q_loaded * res.q_loaded / qc) * power_chip_w;
}

}  // namespace resq::calibration
