#include "resq/circlefit.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <boost/math/tools/minima.hpp>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "resq/error.hpp"
#include "resq/least_squares.hpp"

namespace resq {

Trace::Trace(std::vector<ComplexSample> samples, TraceMeta meta)
    : samples_(std::move(samples)), meta_(std::move(meta)) {
  if (samples_.size() < kMinSamples) {
    throw Error(ErrorCode::kValidationError, "trace has " + std::to_string(samples_.size()) +
                                                 " samples; at least 16 are required");
  }
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    const auto& s = samples_[i];
    if (!std::isfinite(s.freq) || !(s.freq > 0.0) || !std::isfinite(s.s21.real()) ||
        !std::isfinite(s.s21.imag())) {
      throw Error(ErrorCode::kValidationError,
                  "sample " + std::to_string(i) + " is not finite or has non-positive frequency");
    }
  }
  std::stable_sort(samples_.begin(), samples_.end(),
                   [](const ComplexSample& a, const ComplexSample& b) { return a.freq < b.freq; });
  for (std::size_t i = 1; i < samples_.size(); ++i) {
    if (!(samples_[i].freq > samples_[i - 1].freq)) {
      throw Error(ErrorCode::kValidationError,
                  "duplicate frequency " + std::to_string(samples_[i].freq) + " Hz");
    }
  }
}

}  // namespace resq

namespace resq::circlefit {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

double wrap_angle(double a) {
  a = std::remainder(a, kTwoPi);
  return a <= -kPi ? a + kTwoPi : a;
}

struct Arrays {
  std::vector<double> f;
  std::vector<Complex> z;
  double f_mid = 0.0;
};

Arrays unpack(const Trace& trace) {
  Arrays a;
  a.f.reserve(trace.size());
  a.z.reserve(trace.size());
  for (const auto& s : trace.samples()) {
    a.f.push_back(s.freq);
    a.z.push_back(s.s21);
  }
  a.f_mid = 0.5 * (a.f.front() + a.f.back());
  return a;
}

// Removes exp(-2 pi i (f - f_mid) delay); the f_mid part is a global rotation.
std::vector<Complex> remove_delay(const Arrays& a, double delay) {
  std::vector<Complex> out(a.z.size());
  for (std::size_t k = 0; k < a.z.size(); ++k)
    out[k] = a.z[k] * std::polar(1.0, kTwoPi * (a.f[k] - a.f_mid) * delay);
  return out;
}

double circle_rms(const Arrays& a, double delay) {
  const auto pts = remove_delay(a, delay);
  try {
    return fit_circle(pts).rms_residual;
  } catch (const Error&) {
    return std::numeric_limits<double>::max();
  }
}

// Pooled slope of unwrapped phase vs frequency over both edges, with a
// separate intercept per edge.
double edge_phase_slope(const Arrays& a) {
  const std::size_t n = a.f.size();
  const std::size_t edge = std::max<std::size_t>(3, static_cast<std::size_t>(std::lround(0.2 * n)));
  double sxy = 0.0;
  double sxx = 0.0;
  auto accumulate = [&](std::size_t begin, std::size_t end) {
    std::vector<double> ph;
    for (std::size_t k = begin; k < end; ++k) ph.push_back(std::arg(a.z[k]));
    unwrap_in_place(ph);
    const double count = static_cast<double>(end - begin);
    double fm = 0.0;
    double pm = 0.0;
    for (std::size_t k = begin; k < end; ++k) {
      fm += a.f[k] - a.f_mid;
      pm += ph[k - begin];
    }
    fm /= count;
    pm /= count;
    for (std::size_t k = begin; k < end; ++k) {
      const double df = a.f[k] - a.f_mid - fm;
      sxy += df * (ph[k - begin] - pm);
      sxx += df * df;
    }
  };
  accumulate(0, edge);
  accumulate(n - edge, n);
  return sxx > 0.0 ? sxy / sxx : 0.0;
}

}  // namespace

std::vector<std::string> QualityFlags::names() const {
  std::vector<std::string> out;
  if (has(QualityFlag::kNarrowSpan)) out.emplace_back("NARROW_SPAN");
  if (has(QualityFlag::kLowSnr)) out.emplace_back("LOW_SNR");
  if (has(QualityFlag::kShallowDip)) out.emplace_back("SHALLOW_DIP");
  if (has(QualityFlag::kDelayUnstable)) out.emplace_back("DELAY_UNSTABLE");
  return out;
}

CircleGeom fit_circle(std::span<const Complex> points) {
  const std::size_t n = points.size();
  if (n < 3) throw Error(ErrorCode::kDegenerate, "circle fit needs at least 3 points");

  double mean_x = 0.0;
  double mean_y = 0.0;
  for (const auto& p : points) {
    mean_x += p.real();
    mean_y += p.imag();
  }
  mean_x /= static_cast<double>(n);
  mean_y /= static_cast<double>(n);

  double mxx = 0.0, myy = 0.0, mxy = 0.0, mxz = 0.0, myz = 0.0, mzz = 0.0;
  for (const auto& p : points) {
    const double xi = p.real() - mean_x;
    const double yi = p.imag() - mean_y;
    const double zi = xi * xi + yi * yi;
    mxy += xi * yi;
    mxx += xi * xi;
    myy += yi * yi;
    mxz += xi * zi;
    myz += yi * zi;
    mzz += zi * zi;
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  mxx *= inv_n;
  myy *= inv_n;
  mxy *= inv_n;
  mxz *= inv_n;
  myz *= inv_n;
  mzz *= inv_n;

  // Condition number of the 2x2 scatter matrix.
  const double tr = mxx + myy;
  const double disc = std::sqrt(std::max(0.0, 0.25 * (mxx - myy) * (mxx - myy) + mxy * mxy));
  const double lmax = 0.5 * tr + disc;
  const double lmin = 0.5 * tr - disc;
  if (!(lmax > 0.0) || !(lmin > lmax * 1e-12)) {
    throw Error(ErrorCode::kDegenerate, "points are collinear within tolerance");
  }

  // Taubin fit via Newton iteration on the characteristic polynomial
  // (Chernov's formulation on centered data).
  const double mz = mxx + myy;
  const double cov_xy = mxx * myy - mxy * mxy;
  const double var_z = mzz - mz * mz;
  const double a3 = 4.0 * mz;
  const double a2 = -3.0 * mz * mz - mzz;
  const double a1 = var_z * mz + 4.0 * cov_xy * mz - mxz * mxz - myz * myz;
  const double a0 = mxz * (mxz * myy - myz * mxy) + myz * (myz * mxx - mxz * mxy) - var_z * cov_xy;
  const double a22 = a2 + a2;
  const double a33 = a3 + a3 + a3;

  double x = 0.0;
  double y = a0;
  for (int iter = 0; iter < 99; ++iter) {
    const double dy = a1 + x * (a22 + a33 * x);
    const double x_new = x - y / dy;
    if (x_new == x || !std::isfinite(x_new)) break;
    const double y_new = a0 + x_new * (a1 + x_new * (a2 + x_new * a3));
    if (std::abs(y_new) >= std::abs(y)) break;
    x = x_new;
    y = y_new;
  }

  const double det = x * x - x * mz + cov_xy;
  if (det == 0.0 || !std::isfinite(det)) throw Error(ErrorCode::kDegenerate, "singular circle system");
  const double cx = (mxz * (myy - x) - myz * mxy) / det / 2.0;
  const double cy = (myz * (mxx - x) - mxz * mxy) / det / 2.0;

  CircleGeom g;
  g.center = {cx + mean_x, cy + mean_y};
  g.radius = std::sqrt(cx * cx + cy * cy + mz);
  if (!(g.radius > 0.0) || !std::isfinite(g.radius))
    throw Error(ErrorCode::kDegenerate, "circle fit produced a non-positive radius");

  Eigen::Matrix3d jtj = Eigen::Matrix3d::Zero();
  double ss = 0.0;
  for (const auto& p : points) {
    const Complex d = p - g.center;
    const double rho = std::abs(d);
    const double res = rho - g.radius;
    ss += res * res;
    if (rho > 0.0) {
      const Eigen::Vector3d row(-d.real() / rho, -d.imag() / rho, -1.0);
      jtj += row * row.transpose();
    }
  }
  g.rms_residual = std::sqrt(ss * inv_n);
  if (n > 3) {
    const double s2 = ss / static_cast<double>(n - 3);
    const Eigen::Matrix3d cov = jtj.inverse() * s2;
    g.sigma_center_re = std::sqrt(std::max(0.0, cov(0, 0)));
    g.sigma_center_im = std::sqrt(std::max(0.0, cov(1, 1)));
    g.sigma_radius = std::sqrt(std::max(0.0, cov(2, 2)));
  }
  return g;
}

double unwrap_in_place(std::span<double> angles) {
  double max_step = 0.0;
  for (std::size_t k = 1; k < angles.size(); ++k) {
    double d = angles[k] - angles[k - 1];
    d = std::remainder(d, kTwoPi);
    max_step = std::max(max_step, std::abs(d));
    angles[k] = angles[k - 1] + d;
  }
  return max_step;
}

DelayEstimate estimate_delay(const Trace& trace) {
  const Arrays a = unpack(trace);
  const double span = trace.span();

  DelayEstimate est;
  est.seed = -edge_phase_slope(a) / kTwoPi;
  const double half = std::max(5.0 * std::abs(est.seed), 1.0 / span);
  est.lower = est.seed - half;
  est.upper = est.seed + half;

  // Grid fine enough to resolve features of width ~1/span.
  const double cells = std::ceil(2.0 * half * span * 20.0);
  const auto n_grid = static_cast<std::size_t>(std::clamp(cells, 40.0, 4000.0)) + 1;
  const double step = (est.upper - est.lower) / static_cast<double>(n_grid - 1);
  std::vector<double> grid(n_grid);
  std::size_t best = 0;
  double worst = 0.0;
  for (std::size_t i = 0; i < n_grid; ++i) {
    grid[i] = circle_rms(a, est.lower + step * static_cast<double>(i));
    if (grid[i] < grid[best]) best = i;
    if (grid[i] > worst && grid[i] < std::numeric_limits<double>::max()) worst = grid[i];
  }

  // A small circle on a large background leaves narrow basins, so the
  // deepest few grid minima are all refined.
  std::vector<std::size_t> minima;
  for (std::size_t i = 0; i < n_grid; ++i) {
    const bool left = i == 0 || grid[i] <= grid[i - 1];
    const bool right = i + 1 == n_grid || grid[i] <= grid[i + 1];
    if (left && right) minima.push_back(i);
  }
  std::sort(minima.begin(), minima.end(),
            [&](std::size_t x, std::size_t y) { return grid[x] < grid[y]; });
  if (minima.size() > 5) minima.resize(5);

  est.residual = std::numeric_limits<double>::max();
  for (std::size_t idx : minima) {
    const double lo = est.lower + step * static_cast<double>(idx == 0 ? 0 : idx - 1);
    const double hi = est.lower + step * static_cast<double>(std::min(idx + 1, n_grid - 1));
    // Brent on a unit-scaled variable; squared rms is smooth at the minimum.
    auto objective = [&](double u) {
      const double r = circle_rms(a, lo + u * (hi - lo));
      return r * r;
    };
    std::uintmax_t max_iter = 200;
    const auto [u_best, f_best] =
        boost::math::tools::brent_find_minima(objective, 0.0, 1.0, 45, max_iter);
    if (std::sqrt(f_best) < est.residual) {
      est.delay = lo + u_best * (hi - lo);
      est.residual = std::sqrt(f_best);
    }
  }

  const double edge_tol = 1e-6 * (est.upper - est.lower);
  const bool at_bound =
      est.delay - est.lower <= edge_tol || est.upper - est.delay <= edge_tol;
  const bool flat = worst > 0.0 && (worst - grid[best]) < 1e-6 * worst;
  est.unstable = at_bound || flat;
  return est;
}

PhaseFit fit_phase(std::span<const double> freqs, std::span<const double> angles,
                   std::span<const double> weights) {
  const std::size_t n = freqs.size();
  if (n != angles.size() || n < 4 || (!weights.empty() && weights.size() != n))
    throw Error(ErrorCode::kInvalidArgument, "phase fit needs >= 4 matching samples");

  const double f_ref = 0.5 * (freqs.front() + freqs.back());
  std::vector<double> x(n);
  for (std::size_t k = 0; k < n; ++k) x[k] = (freqs[k] - f_ref) / f_ref;
  auto w = [&](std::size_t k) { return weights.empty() ? 1.0 : weights[k]; };

  const auto [mn, mx] = std::minmax_element(angles.begin(), angles.end());
  const double swing = *mx - *mn;

  // Seeds: resonance where the angle crosses the midpoint of the end
  // angles; width from the +-pi/2 crossings, else from the swing.
  const double theta_mid = 0.5 * (angles.front() + angles.back());
  auto crossing = [&](double level) -> double {
    for (std::size_t k = 1; k < n; ++k) {
      const double a0 = angles[k - 1] - level;
      const double a1 = angles[k] - level;
      if (a0 == 0.0) return x[k - 1];
      if ((a0 > 0.0) != (a1 > 0.0)) return x[k - 1] + (x[k] - x[k - 1]) * a0 / (a0 - a1);
    }
    return std::numeric_limits<double>::quiet_NaN();
  };
  double u0 = crossing(theta_mid);
  if (!std::isfinite(u0)) u0 = 0.0;
  double ql0 = 0.0;
  const double xp = crossing(theta_mid + kPi / 2);
  const double xm = crossing(theta_mid - kPi / 2);
  if (std::isfinite(xp) && std::isfinite(xm) && xp != xm) {
    ql0 = 1.0 / std::abs(xm - xp);
  } else {
    const double half_span = 0.5 * (x.back() - x.front());
    const double half_swing = std::clamp(0.5 * swing, 1e-3, kPi - 1e-3);
    ql0 = std::tan(0.5 * half_swing) / (2.0 * half_span);
  }

  // Parameters: theta0, ln Ql, u with fr = f_ref (1 + u).
  auto residual_fn = [&](std::span<const double> p, std::span<double> r, std::span<double> jac) {
    const double ql = std::exp(p[1]);
    const double u = p[2];
    for (std::size_t k = 0; k < n; ++k) {
      const double y = 2.0 * ql * (u - x[k]) / (1.0 + u);
      r[k] = w(k) * (angles[k] - (p[0] + 2.0 * std::atan(y)));
      if (!jac.empty()) {
        const double g = 2.0 / (1.0 + y * y);
        jac[3 * k + 0] = -w(k);
        jac[3 * k + 1] = -w(k) * g * y;
        jac[3 * k + 2] = -w(k) * g * 2.0 * ql * (1.0 + x[k]) / ((1.0 + u) * (1.0 + u));
      }
    }
  };

  const double inf = std::numeric_limits<double>::infinity();
  const std::vector<double> lower{-inf, -inf, -0.5};
  const std::vector<double> upper{inf, inf, 0.5};
  lsq::Result best;
  bool have = false;
  for (double scale : {1.0, 0.3, 3.0}) {
    std::vector<double> p0{theta_mid, std::log(ql0 * scale), u0};
    try {
      auto r = lsq::minimize(residual_fn, n, p0, lower, upper);
      if (!have || r.cost < best.cost) {
        best = std::move(r);
        have = true;
      }
    } catch (const Error&) {
    }
  }
  if (!have || !std::isfinite(best.cost))
    throw Error(ErrorCode::kDidNotConverge, "phase fit failed from every start");

  PhaseFit out;
  out.theta0 = best.x[0];
  out.q_loaded = std::exp(best.x[1]);
  out.fr = f_ref * (1.0 + best.x[2]);
  out.swing = swing;
  out.narrow_span = swing < kPi;
  const double dof = static_cast<double>(n) - 3.0;
  const double s2 = dof > 0 ? best.cost / dof : 0.0;
  out.rms_residual = std::sqrt(best.cost / static_cast<double>(n));
  out.sigma_theta0 = std::sqrt(best.covariance[0] * s2);
  out.sigma_q_loaded = out.q_loaded * std::sqrt(best.covariance[4] * s2);
  out.sigma_fr = f_ref * std::sqrt(best.covariance[8] * s2);
  if (!(out.q_loaded > 0.0) || out.fr < freqs.front() || out.fr > freqs.back()) {
    throw Error(ErrorCode::kDidNotConverge, "phase fit placed the resonance outside the span");
  }
  return out;
}

FitReport::FitReport(ResonanceParams res, EnvironmentParams env, double qi, double qi_sigma,
                     double chi2_reduced, QualityFlags flags)
    : res_(res), env_(env), qi_(qi), qi_sigma_(qi_sigma), chi2_reduced_(chi2_reduced), flags_(flags) {
  validate(res_);
  const double expected = qi_from_circle(res_.q_loaded, res_.q_ext_mag, res_.phi0);
  if (!(std::abs(qi_ - expected) <= 1e-12 * expected)) {
    throw Error(ErrorCode::kInvalidArgument, "qi inconsistent with resonance parameters");
  }
  if (!(qi_sigma_ >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "qi_sigma must be >= 0");
}

namespace {

// Circle center (re, im), radius, resonance angle, loaded Q.
using Geometry = std::array<double, 5>;

// (amp, alpha, k = Ql/|Qe|, phi0) from circle geometry and resonance angle.
struct Assembled {
  double amp, alpha, k, phi0;
};

Assembled assemble(const Geometry& g) {
  const Complex center(g[0], g[1]);
  const Complex off = center - std::polar(g[2], g[3]);
  Assembled a;
  a.amp = std::abs(off);
  a.alpha = std::arg(off);
  a.k = 2.0 * g[2] / a.amp;
  a.phi0 = wrap_angle(g[3] + kPi - a.alpha);
  return a;
}

double inverse_qi(const Geometry& g) {
  const Assembled a = assemble(g);
  return (1.0 - a.k * std::cos(a.phi0)) / g[4];
}

// Joint complex least-squares refinement of all seven model parameters,
// started from the algebraic estimate. Parameters: Re/Im of the complex
// amplitude in the f_mid-referenced frame, delay * span, ln Ql, u with
// fr = f_ref (1 + u), k = Ql/|Qe|, phi0.
struct Refined {
  Complex amp;  // f_mid frame
  double delay = 0.0;
  double fr = 0.0;
  double q_loaded = 0.0;
  double k = 0.0;
  double phi0 = 0.0;
  double cost = 0.0;
  std::array<double, 9> cov_qlkphi{};  // covariance of (ln Ql, k, phi0)
  bool ok = false;
};

Refined refine(const Arrays& a, Complex amp0, double delay0, double fr0, double ql0, double k0,
               double phi0) {
  const std::size_t n = a.f.size();
  const double span = a.f.back() - a.f.front();
  const double f_ref = a.f_mid;
  std::vector<double> xk(n), df(n);
  for (std::size_t i = 0; i < n; ++i) {
    xk[i] = (a.f[i] - f_ref) / f_ref;
    df[i] = a.f[i] - a.f_mid;
  }
  using namespace std::complex_literals;
  auto fn = [&](std::span<const double> p, std::span<double> r, std::span<double> jac) {
    const Complex A(p[0], p[1]);
    const double tau = p[2] / span;
    const double ql = std::exp(p[3]);
    const double u = p[4];
    const double k = p[5];
    const Complex rot = std::polar(1.0, p[6]);
    for (std::size_t i = 0; i < n; ++i) {
      const double x = (xk[i] - u) / (1.0 + u);
      const Complex d = 1.0 + 2.0i * ql * x;
      const Complex dip = k * rot / d;
      const Complex e = std::polar(1.0, -kTwoPi * df[i] * tau);
      const Complex s = 1.0 - dip;
      const Complex model = A * e * s;
      const Complex res = a.z[i] - model;
      r[2 * i] = res.real();
      r[2 * i + 1] = res.imag();
      if (jac.empty()) continue;
      const Complex ae = A * e;
      Complex dz[7];
      dz[0] = e * s;
      dz[1] = 1.0i * e * s;
      dz[2] = model * (-1.0i * kTwoPi * df[i]) / span;
      dz[3] = ae * dip / d * (2.0i * ql * x);
      dz[4] = ae * dip / d * (2.0i * ql * (-(1.0 + xk[i]) / ((1.0 + u) * (1.0 + u))));
      dz[5] = -ae * rot / d;
      dz[6] = -ae * 1.0i * dip;
      for (int j = 0; j < 7; ++j) {
        jac[(2 * i) * 7 + j] = -dz[j].real();
        jac[(2 * i + 1) * 7 + j] = -dz[j].imag();
      }
    }
  };
  const double inf = std::numeric_limits<double>::infinity();
  const std::vector<double> lower{-inf, -inf, -inf, -inf, -0.5, 0.0, -kPi};
  const std::vector<double> upper{inf, inf, inf, inf, 0.5, inf, kPi};
  std::vector<double> p0{amp0.real(), amp0.imag(), delay0 * span, std::log(ql0), fr0 / f_ref - 1.0,
                         k0, phi0};
  Refined out;
  lsq::Result r;
  try {
    r = lsq::minimize(fn, 2 * n, p0, lower, upper);
  } catch (const Error&) {
    return out;
  }
  out.amp = {r.x[0], r.x[1]};
  out.delay = r.x[2] / span;
  out.q_loaded = std::exp(r.x[3]);
  out.fr = f_ref * (1.0 + r.x[4]);
  out.k = r.x[5];
  out.phi0 = wrap_angle(r.x[6]);
  out.cost = r.cost;
  const double s2 = r.cost / static_cast<double>(2 * n - 7);
  constexpr std::size_t idx[3] = {3, 5, 6};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) out.cov_qlkphi[3 * i + j] = r.covariance[idx[i] * 7 + idx[j]] * s2;
  out.ok = std::isfinite(r.cost) && out.q_loaded > 0.0 && out.k > 0.0 &&
           out.fr >= a.f.front() && out.fr <= a.f.back();
  return out;
}

}  // namespace

FitReport extract(const Trace& trace) {
  const Arrays a = unpack(trace);
  const std::size_t n = a.f.size();

  QualityFlags flags;
  const DelayEstimate delay = estimate_delay(trace);
  if (delay.unstable) flags.set(QualityFlag::kDelayUnstable);

  const std::vector<Complex> zc = remove_delay(a, delay.delay);
  const CircleGeom circle = fit_circle(zc);

  std::vector<double> angles(n);
  for (std::size_t k = 0; k < n; ++k) angles[k] = std::arg(zc[k] - circle.center);
  if (unwrap_in_place(angles) > kPi / 2) flags.set(QualityFlag::kLowSnr);

  const PhaseFit phase = fit_phase(a.f, angles);
  if (phase.narrow_span) flags.set(QualityFlag::kNarrowSpan);

  const Geometry geom{circle.center.real(), circle.center.imag(), circle.radius, phase.theta0,
                      phase.q_loaded};
  const Assembled alg = assemble(geom);

  // Algebraic estimate in the f_mid frame, then joint refinement.
  const Complex off = Complex(geom[0], geom[1]) - std::polar(geom[2], geom[3]);
  const Refined ref = refine(a, off, delay.delay, phase.fr, phase.q_loaded, alg.k, alg.phi0);

  ResonanceParams res;
  EnvironmentParams env;
  double inv_qi_var = 0.0;
  if (ref.ok && std::abs(ref.phi0) < kPi / 2) {
    res = {ref.fr, ref.q_loaded, ref.q_loaded / ref.k, ref.phi0};
    env = {std::abs(ref.amp), wrap_angle(std::arg(ref.amp) + kTwoPi * a.f_mid * ref.delay), ref.delay};
    // Full covariance of (ln Ql, k, phi0) through 1/Qi = (1 - k cos phi0) / Ql.
    const double c = std::cos(ref.phi0);
    const double g[3] = {-(1.0 - ref.k * c) / ref.q_loaded, -c / ref.q_loaded,
                         ref.k * std::sin(ref.phi0) / ref.q_loaded};
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) inv_qi_var += g[i] * ref.cov_qlkphi[3 * i + j] * g[j];
  } else {
    if (!(std::abs(alg.phi0) < kPi / 2)) {
      throw Error(ErrorCode::kNonPhysical, "impedance-mismatch angle outside (-pi/2, pi/2)");
    }
    res = {phase.fr, phase.q_loaded, phase.q_loaded / alg.k, alg.phi0};
    env = {alg.amp, wrap_angle(alg.alpha + kTwoPi * a.f_mid * delay.delay), delay.delay};
    // First-order propagation with diagonal covariances of the algebraic steps.
    const double sig[5] = {circle.sigma_center_re, circle.sigma_center_im, circle.sigma_radius,
                           phase.sigma_theta0, phase.sigma_q_loaded};
    for (int i = 0; i < 5; ++i) {
      if (!(sig[i] > 0.0)) continue;
      Geometry up = geom;
      Geometry dn = geom;
      const double h = std::max(1e-6 * std::abs(geom[i]), 1e-3 * sig[i]);
      up[i] += h;
      dn[i] -= h;
      const double d = (inverse_qi(up) - inverse_qi(dn)) / (2.0 * h);
      inv_qi_var += d * d * sig[i] * sig[i];
    }
  }
  const double qi = qi_from_circle(res.q_loaded, res.q_ext_mag, res.phi0);
  const double qi_sigma = qi * qi * std::sqrt(std::max(0.0, inv_qi_var));

  if (trace.span() < res.fr / res.q_loaded) flags.set(QualityFlag::kNarrowSpan);

  double ss = 0.0;
  for (std::size_t k = 0; k < n; ++k) ss += std::norm(a.z[k] - s21_notch(a.f[k], res, env));
  // Per-point noise: rms complex deviation from the fitted model.
  const double point_noise = std::sqrt(ss / (static_cast<double>(n) - 3.5));
  const double diameter = env.amp * res.q_loaded / res.q_ext_mag;
  if (diameter < 5.0 * point_noise) flags.set(QualityFlag::kShallowDip);
  const double noise = std::max(circle.rms_residual, 1e-15 * env.amp);
  const double chi2 = ss / (static_cast<double>(2 * n - 7) * noise * noise);

  FitReport report(res, env, qi, qi_sigma, chi2, flags);
  report.circle = circle;
  report.sigma_q_loaded = ref.ok ? res.q_loaded * std::sqrt(ref.cov_qlkphi[0]) : phase.sigma_q_loaded;
  report.sigma_fr = phase.sigma_fr;
  return report;
}

}  // namespace resq::circlefit
