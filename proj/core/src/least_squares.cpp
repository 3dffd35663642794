#include "resq/least_squares.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

#include "resq/error.hpp"

namespace resq::lsq {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

constexpr double kInf = std::numeric_limits<double>::infinity();

double clamp_to(double v, double lo, double hi) { return std::min(std::max(v, lo), hi); }

}  // namespace

std::vector<double> covariance_from_jacobian(std::span<const double> jacobian, std::size_t m,
                                             std::size_t n) {
  Eigen::Map<const RowMatrix> jac(jacobian.data(), static_cast<Eigen::Index>(m),
                                  static_cast<Eigen::Index>(n));
  std::vector<double> cov(n * n, 0.0);

  Eigen::VectorXd norms = jac.colwise().norm().transpose();
  const double max_norm = norms.maxCoeff();
  std::vector<bool> usable(n);
  for (std::size_t j = 0; j < n; ++j) usable[j] = norms[j] > 1e-14 * max_norm && max_norm > 0.0;

  // Equilibrate columns, then pseudo-invert; singular directions mark the
  // parameters that load on them as unconstrained.
  RowMatrix scaled = jac;
  for (std::size_t j = 0; j < n; ++j)
    scaled.col(j) = usable[j] ? Eigen::VectorXd(jac.col(j) / norms[j]) : Eigen::VectorXd::Zero(m);
  Eigen::JacobiSVD<RowMatrix> svd(scaled, Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  const auto& v = svd.matrixV();
  const double cutoff = sv.size() > 0 ? sv[0] * 1e-10 : 0.0;

  Eigen::MatrixXd inv = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index k = 0; k < sv.size(); ++k) {
    if (sv[k] > cutoff) {
      inv += v.col(k) * v.col(k).transpose() / (sv[k] * sv[k]);
    } else {
      for (std::size_t j = 0; j < n; ++j)
        if (std::abs(v(static_cast<Eigen::Index>(j), k)) > 1e-6) usable[j] = false;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (usable[i] && usable[j]) {
        cov[i * n + j] = inv(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) /
                         (norms[i] * norms[j]);
      } else if (i == j) {
        cov[i * n + j] = kInf;
      }
    }
  }
  return cov;
}

Result minimize(const ResidualFn& fn, std::size_t n_residuals, std::vector<double> x0,
                std::span<const double> lower, std::span<const double> upper,
                const Options& options) {
  const std::size_t n = x0.size();
  const std::size_t m = n_residuals;
  if (lower.size() != n || upper.size() != n)
    throw Error(ErrorCode::kInvalidArgument, "bounds size mismatch");
  if (m < n) throw Error(ErrorCode::kInvalidArgument, "fewer residuals than parameters");

  Result out;
  out.x = std::move(x0);
  for (std::size_t i = 0; i < n; ++i) out.x[i] = clamp_to(out.x[i], lower[i], upper[i]);

  std::vector<double> r(m), jac(m * n), r_trial(m), x_trial(n);
  fn(out.x, r, jac);
  auto sum_sq = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double e : v) s += e * e;
    return s;
  };
  out.cost = sum_sq(r);
  if (!std::isfinite(out.cost)) throw Error(ErrorCode::kDidNotConverge, "non-finite initial cost");

  double lambda = options.initial_lambda;
  for (out.iterations = 0; out.iterations < options.max_iterations; ++out.iterations) {
    if (out.cost == 0.0) {
      out.converged = true;
      break;
    }
    Eigen::Map<const RowMatrix> J(jac.data(), static_cast<Eigen::Index>(m),
                                  static_cast<Eigen::Index>(n));
    Eigen::Map<const Eigen::VectorXd> rv(r.data(), static_cast<Eigen::Index>(m));
    const Eigen::VectorXd g = J.transpose() * rv;
    const Eigen::MatrixXd A = J.transpose() * J;

    // Active set: variables pinned at a bound with the gradient pushing outward.
    std::vector<Eigen::Index> free;
    for (std::size_t i = 0; i < n; ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      const bool at_lo = out.x[i] <= lower[i] && g[ii] > 0.0;
      const bool at_hi = out.x[i] >= upper[i] && g[ii] < 0.0;
      if (!at_lo && !at_hi) free.push_back(ii);
    }
    if (free.empty()) {
      out.converged = true;
      break;
    }
    const auto nf = static_cast<Eigen::Index>(free.size());
    Eigen::MatrixXd Af(nf, nf);
    Eigen::VectorXd gf(nf), diag(nf);
    double max_diag = 0.0;
    for (Eigen::Index a = 0; a < nf; ++a) {
      gf[a] = g[free[a]];
      for (Eigen::Index b = 0; b < nf; ++b) Af(a, b) = A(free[a], free[b]);
      max_diag = std::max(max_diag, Af(a, a));
    }
    for (Eigen::Index a = 0; a < nf; ++a) diag[a] = std::max(Af(a, a), 1e-12 * max_diag);

    double gnorm = 0.0;
    for (Eigen::Index a = 0; a < nf; ++a)
      gnorm = std::max(gnorm, std::abs(gf[a]) / std::sqrt(diag[a] * out.cost));
    if (gnorm <= options.gtol) {
      out.converged = true;
      break;
    }

    bool accepted = false;
    bool stalled = false;
    while (!accepted) {
      Eigen::MatrixXd H = Af;
      H.diagonal() += lambda * diag;
      const Eigen::VectorXd step = H.ldlt().solve(-gf);
      x_trial = out.x;
      for (Eigen::Index a = 0; a < nf; ++a) {
        const auto i = static_cast<std::size_t>(free[a]);
        x_trial[i] = clamp_to(out.x[i] + step[a], lower[i], upper[i]);
      }
      fn(x_trial, r_trial, {});
      const double trial_cost = sum_sq(r_trial);
      if (std::isfinite(trial_cost) && trial_cost < out.cost) {
        double dx = 0.0;
        double xn = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          dx += (x_trial[i] - out.x[i]) * (x_trial[i] - out.x[i]);
          xn += out.x[i] * out.x[i];
        }
        const double decrease = out.cost - trial_cost;
        out.x = x_trial;
        fn(out.x, r, jac);
        const double previous = out.cost;
        out.cost = sum_sq(r);
        lambda = std::max(lambda * 0.1, 1e-15);
        accepted = true;
        if (decrease <= options.ftol * previous ||
            std::sqrt(dx) <= options.xtol * (std::sqrt(xn) + options.xtol)) {
          out.converged = true;
        }
      } else {
        lambda *= 10.0;
        if (lambda > 1e16) {
          stalled = true;
          break;
        }
      }
    }
    if (stalled || out.converged) {
      out.converged = true;
      break;
    }
  }
  out.covariance = covariance_from_jacobian(jac, m, n);
  return out;
}

}  // namespace resq::lsq
