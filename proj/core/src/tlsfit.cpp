#include "resq/tlsfit.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>

#include "resq/error.hpp"
#include "resq/least_squares.hpp"

namespace resq::tls {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kBetaFloor = 1e-6;

// Internal coordinates: the TLS term is written relative to a pivot photon
// number n_p inside the data range,
//   loss(n) = l ((1 + n_p/n_c) / (1 + n/n_c))^beta + d,
// so l is the TLS loss at n_p and stays nearly uncorrelated with n_c. Loss
// amplitudes are in units of `scale`.
struct Data {
  std::vector<double> log_n;
  std::vector<double> loss;   // 1/Qi divided by scale
  std::vector<double> sigma;  // divided by scale
  double log_pivot = 0.0;
  double scale = 1.0;
  double thermal = 1.0;
};

// log(1 + n/n_c) and its derivative with respect to log n_c.
struct LogBase {
  double value, d_log_nc;
};

LogBase log_base(double log_n, double log_nc) {
  const double ratio = std::exp(log_n - log_nc);
  return {std::log1p(ratio), -ratio / (1.0 + ratio)};
}

double shape(const Data& data, double log_n, double log_nc, double beta) {
  return std::exp(beta * (log_base(data.log_pivot, log_nc).value - log_base(log_n, log_nc).value));
}

void residuals(const Data& data, std::span<const double> p, std::span<double> r,
               std::span<double> jac) {
  const double l = p[0];
  const double log_nc = p[1];
  const double beta = p[2];
  const double d = p[3];
  const LogBase piv = log_base(data.log_pivot, log_nc);
  for (std::size_t k = 0; k < data.loss.size(); ++k) {
    const LogBase lb = log_base(data.log_n[k], log_nc);
    const double g = std::exp(beta * (piv.value - lb.value));
    const double w = 1.0 / data.sigma[k];
    r[k] = (data.loss[k] - (l * g + d)) * w;
    if (!jac.empty()) {
      jac[4 * k + 0] = -g * w;
      jac[4 * k + 1] = -l * g * beta * (piv.d_log_nc - lb.d_log_nc) * w;
      jac[4 * k + 2] = -l * g * (piv.value - lb.value) * w;
      jac[4 * k + 3] = -w;
    }
  }
}

double chi2_of(const Data& data, const std::vector<double>& p) {
  std::vector<double> r(data.loss.size());
  residuals(data, p, r, {});
  double s = 0.0;
  for (double e : r) s += e * e;
  return s;
}

// Weighted linear least squares for (l, d) at fixed (log_nc, beta), clamped to >= 0.
std::pair<double, double> linear_amplitudes(const Data& data, double log_nc, double beta) {
  double sww = 0.0, sws = 0.0, wss = 0.0, swy = 0.0, swsy = 0.0;
  for (std::size_t k = 0; k < data.loss.size(); ++k) {
    const double w = 1.0 / (data.sigma[k] * data.sigma[k]);
    const double s = shape(data, data.log_n[k], log_nc, beta);
    sww += w;
    sws += w * s;
    wss += w * s * s;
    swy += w * data.loss[k];
    swsy += w * s * data.loss[k];
  }
  const double det = sww * wss - sws * sws;
  double a = det != 0.0 ? (sww * swsy - sws * swy) / det : 0.0;
  double d = det != 0.0 ? (wss * swy - sws * swsy) / det : swy / sww;
  if (a < 0.0) {
    a = 0.0;
    d = swy / sww;
  }
  if (d < 0.0) {
    d = 0.0;
    a = wss > 0.0 ? std::max(0.0, swsy / wss) : 0.0;
  }
  return {a, d};
}

struct Candidate {
  std::vector<double> x;
  double chi2 = kInf;
  std::vector<double> covariance;
};

bool better(const Candidate& c, const Candidate& best) {
  const double tol = 1e-9 * std::max(c.chi2, best.chi2) + 1e-12;
  if (std::abs(c.chi2 - best.chi2) <= tol) return c.x[1] < best.x[1];
  return c.chi2 < best.chi2;
}

}  // namespace

std::vector<std::string> IdentifiabilityFlags::names() const {
  std::vector<std::string> out;
  if (has(Identifiability::kNcUnbounded)) out.emplace_back("NC_UNBOUNDED");
  if (has(Identifiability::kBetaAtBound)) out.emplace_back("BETA_AT_BOUND");
  if (has(Identifiability::kSaturationUnreached)) out.emplace_back("SATURATION_UNREACHED");
  return out;
}

IdentifiabilityFlags IdentifiabilityFlags::from_names(std::span<const std::string> names) {
  IdentifiabilityFlags f;
  for (const auto& n : names) {
    if (n == "NC_UNBOUNDED") f.set(Identifiability::kNcUnbounded);
    else if (n == "BETA_AT_BOUND") f.set(Identifiability::kBetaAtBound);
    else if (n == "SATURATION_UNREACHED") f.set(Identifiability::kSaturationUnreached);
    else throw Error(ErrorCode::kParseError, "unknown identifiability flag '" + n + "'");
  }
  return f;
}

std::array<double, 4> tls_jacobian(double n, const TlsModelParams& p) {
  const double t = thermal_factor(p.omega0, p.temperature);
  const double base = 1.0 + n / p.n_c;
  const double s = std::pow(base, -p.beta);
  return {
      t * s,
      p.f_delta_tls0 * t * p.beta * n / (p.n_c * p.n_c) * s / base,
      -p.f_delta_tls0 * t * s * std::log(base),
      1.0,
  };
}

double qi_at(double n, const TlsFitResult& result) {
  return 1.0 / tls_inverse_q(n, result.params);
}

TlsFitResult fit_tls(std::span<const calibration::PowerPoint> points, double f0,
                     double temperature, const FitOptions& options) {
  if (points.size() < 4) throw Error(ErrorCode::kInsufficientSpan, "TLS fit needs at least 4 points");
  if (!(f0 > 0.0)) throw Error(ErrorCode::kInvalidArgument, "resonance frequency must be positive");
  if (!(temperature >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "temperature must be >= 0");

  Data data;
  std::vector<double> raw_loss;
  double n_min = kInf;
  double n_max = 0.0;
  for (const auto& p : points) {
    if (!(p.n_mean > 0.0) || !(p.qi > 0.0) || !(p.qi_sigma > 0.0) || !std::isfinite(p.qi_sigma)) {
      throw Error(ErrorCode::kInvalidArgument, "power points need positive n, qi and qi_sigma");
    }
    n_min = std::min(n_min, p.n_mean);
    n_max = std::max(n_max, p.n_mean);
    raw_loss.push_back(1.0 / p.qi);
  }
  if (std::log10(n_max / n_min) < 2.0) {
    throw Error(ErrorCode::kInsufficientSpan, "photon numbers span less than two decades");
  }

  std::vector<double> sorted_loss = raw_loss;
  std::sort(sorted_loss.begin(), sorted_loss.end());
  data.scale = sorted_loss[sorted_loss.size() / 2];
  data.thermal = thermal_factor(angular(f0), temperature);
  for (std::size_t k = 0; k < points.size(); ++k) {
    const auto& p = points[k];
    data.log_n.push_back(std::log(p.n_mean));
    data.loss.push_back(raw_loss[k] / data.scale);
    data.sigma.push_back(p.qi_sigma / (p.qi * p.qi) / data.scale);
  }

  const double log_min = std::log(n_min);
  const double log_max = std::log(n_max);
  data.log_pivot = 0.5 * (log_min + log_max);
  const std::vector<double> lower{0.0, log_min - std::log(1e6), kBetaFloor, 0.0};
  const std::vector<double> upper{kInf, log_max + std::log(1e6), options.beta_max, kInf};
  const std::size_t m = points.size();
  auto fn = [&](std::span<const double> x, std::span<double> r, std::span<double> j) {
    residuals(data, x, r, j);
  };
  lsq::Options lm;
  lm.max_iterations = 5000;

  std::vector<std::vector<double>> starts;
  const int seeds = std::max(options.n_c_seeds, 1);
  const double seed_lo = log_min - std::log(10.0);
  const double seed_hi = log_max + std::log(10.0);
  for (int i = 0; i < seeds; ++i) {
    const double log_nc =
        seeds == 1 ? 0.5 * (seed_lo + seed_hi) : seed_lo + (seed_hi - seed_lo) * i / (seeds - 1);
    const double beta0 = std::min(0.25, options.beta_max);
    const auto [a0, d0] = linear_amplitudes(data, log_nc, beta0);
    starts.push_back({a0, log_nc, beta0, d0});
  }
  if (options.start) {
    const auto& s = *options.start;
    const double beta0 = std::clamp(s.beta, kBetaFloor, options.beta_max);
    const double l0 = s.f_delta_tls0 / data.scale * data.thermal *
                      std::exp(-beta0 * log_base(data.log_pivot, std::log(s.n_c)).value);
    starts.push_back({l0, std::log(s.n_c), beta0, s.delta_other / data.scale});
  }

  Candidate best;
  bool any_converged = false;
  for (const auto& x0 : starts) {
    try {
      const auto r = lsq::minimize(fn, m, x0, lower, upper, lm);
      if (!r.converged) continue;
      any_converged = true;
      Candidate c{r.x, r.cost, r.covariance};
      if (best.x.empty() || better(c, best)) best = std::move(c);
    } catch (const Error&) {
    }
  }
  if (!any_converged) throw Error(ErrorCode::kDidNotConverge, "no TLS fit start converged");

  // Power-independent candidate: zero TLS amplitude, weighted-mean floor.
  {
    double sw = 0.0;
    double swy = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
      const double w = 1.0 / (data.sigma[k] * data.sigma[k]);
      sw += w;
      swy += w * data.loss[k];
    }
    Candidate flat;
    flat.x = {0.0, seed_lo, std::min(0.25, options.beta_max), swy / sw};
    flat.chi2 = chi2_of(data, flat.x);
    if (better(flat, best)) {
      std::vector<double> jac(m * 4);
      std::vector<double> r(m);
      residuals(data, flat.x, r, jac);
      flat.covariance = lsq::covariance_from_jacobian(jac, m, 4);
      best = std::move(flat);
    }
  }

  // Back to (F d0, n_c, beta, d_other); F d0 depends on (l, log n_c, beta).
  const LogBase piv = log_base(data.log_pivot, best.x[1]);
  const double amp = std::exp(best.x[2] * piv.value) / data.thermal;
  const double f_delta = best.x[0] * amp;
  const std::array<double, 3> grad{amp, f_delta * best.x[2] * piv.d_log_nc, f_delta * piv.value};
  double var_f = 0.0;
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 3; ++j) {
      if (grad[i] == 0.0 || grad[j] == 0.0) continue;
      var_f += grad[i] * best.covariance[i * 4 + j] * grad[j];
    }
  }

  TlsFitResult out;
  out.params.f_delta_tls0 = f_delta * data.scale;
  out.params.n_c = std::exp(best.x[1]);
  out.params.beta = best.x[2];
  out.params.delta_other = best.x[3] * data.scale;
  out.params.omega0 = angular(f0);
  out.params.temperature = temperature;
  auto sd = [&](std::size_t i) { return std::sqrt(best.covariance[i * 4 + i]); };
  out.sigmas.f_delta_tls0 = std::sqrt(std::max(var_f, 0.0)) * data.scale;
  out.sigmas.n_c = sd(1) * out.params.n_c;
  out.sigmas.beta = sd(2);
  out.sigmas.delta_other = sd(3) * data.scale;
  out.chi2_reduced = best.chi2 / static_cast<double>(std::max<std::size_t>(m - 4, 1));

  // chi^2 profile in log(n_c): flat within 1% over the decade around the optimum.
  bool flat_profile = true;
  const double chi2_min = best.chi2;
  for (double shift : {-0.5 * std::log(10.0), 0.5 * std::log(10.0)}) {
    const double log_nc = best.x[1] + shift;
    std::vector<double> lo = lower;
    std::vector<double> hi = upper;
    lo[1] = hi[1] = log_nc;
    std::vector<double> x0 = best.x;
    x0[1] = log_nc;
    double prof = kInf;
    try {
      prof = lsq::minimize(fn, m, x0, lo, hi, lm).cost;
    } catch (const Error&) {
    }
    if (!(prof <= chi2_min * 1.01 + 1e-9)) flat_profile = false;
  }
  if (flat_profile) out.identifiability.set(Identifiability::kNcUnbounded);
  if (out.params.beta + out.sigmas.beta >= options.beta_max) {
    out.identifiability.set(Identifiability::kBetaAtBound);
  }
  if (n_max < 10.0 * out.params.n_c) out.identifiability.set(Identifiability::kSaturationUnreached);
  return out;
}

}  // namespace resq::tls
