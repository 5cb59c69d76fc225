#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "nvmag/constants.hpp"

namespace nvmag {

struct CurveFitResult {
  std::vector<std::string> names;
  std::vector<double> params;
  std::vector<double> std_errors;
  double residual_rms = 0.0;
  bool converged = false;
  int iterations = 0;
  bool censored = false;  // stretched exponential: T2 beyond the sampled range

  double value(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
      if (names[i] == name) return params[i];
    throw std::out_of_range("no fit parameter named " + name);
  }
  double error(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
      if (names[i] == name) return std_errors[i];
    throw std::out_of_range("no fit parameter named " + name);
  }
};

struct FitOptions {
  int max_iterations = 500;
  double tolerance = 1e-10;
  double max_rms = std::numeric_limits<double>::infinity();
};

/// Bounded Levenberg-Marquardt on a model y = f(x, p). Parameters are
/// clamped into [lower, upper] after every step. The Jacobian uses central
/// differences. Standard errors come from s^2 (J^T J)^-1 at the optimum.
template <class Model>
CurveFitResult levenberg_marquardt(const Model& f, const std::vector<double>& x, const std::vector<double>& y,
                                   std::vector<double> p0, const std::vector<double>& lower,
                                   const std::vector<double>& upper, const FitOptions& opt = {}) {
  const std::size_t n = x.size(), k = p0.size();
  if (y.size() != n) throw std::invalid_argument("fit: x and y sizes differ");
  if (n < 2 * k) throw std::invalid_argument("fit: need at least twice as many points as parameters");
  if (lower.size() != k || upper.size() != k) throw std::invalid_argument("fit: bound sizes differ");

  auto clamp = [&](Eigen::VectorXd& p) {
    for (std::size_t j = 0; j < k; ++j) p[j] = std::clamp(p[j], lower[j], upper[j]);
  };
  auto residuals = [&](const Eigen::VectorXd& p, Eigen::VectorXd& r) {
    std::vector<double> pv(p.data(), p.data() + k);
    for (std::size_t i = 0; i < n; ++i) r[i] = f(x[i], pv) - y[i];
  };

  Eigen::VectorXd p = Eigen::Map<Eigen::VectorXd>(p0.data(), static_cast<Eigen::Index>(k));
  clamp(p);
  Eigen::VectorXd r(n), r_try(n), rp(n), rm(n);
  residuals(p, r);
  double cost = r.squaredNorm();
  if (!std::isfinite(cost)) throw std::invalid_argument("fit: initial guess gives non-finite residuals");

  Eigen::MatrixXd J(n, k);
  auto jacobian = [&](const Eigen::VectorXd& at) {
    for (std::size_t j = 0; j < k; ++j) {
      const double h = 1e-7 * std::max(1.0, std::abs(at[j]));
      Eigen::VectorXd a = at, b = at;
      a[j] += h;
      b[j] -= h;
      residuals(a, rp);
      residuals(b, rm);
      J.col(static_cast<Eigen::Index>(j)) = (rp - rm) / (2.0 * h);
    }
  };

  CurveFitResult out;
  double lambda = 1e-3;
  int it = 0;
  for (; it < opt.max_iterations; ++it) {
    if (cost == 0.0) {
      out.converged = true;
      break;
    }
    jacobian(p);
    Eigen::MatrixXd A = J.transpose() * J;
    Eigen::VectorXd g = J.transpose() * r;
    // Freeze parameters sitting on a bound whose descent direction points outward.
    for (std::size_t j = 0; j < k; ++j) {
      const bool at_lo = p[j] <= lower[j] && g[j] > 0.0;
      const bool at_hi = p[j] >= upper[j] && g[j] < 0.0;
      if (at_lo || at_hi) {
        A.row(j).setZero();
        A.col(j).setZero();
        A(j, j) = 1.0;
        g[j] = 0.0;
      }
    }
    const double dmax = A.diagonal().maxCoeff();
    bool improved = false;
    while (lambda < 1e16) {
      Eigen::MatrixXd M = A;
      for (std::size_t j = 0; j < k; ++j) M(j, j) += lambda * std::max(A(j, j), 1e-12 * dmax + 1e-300);
      Eigen::VectorXd p_try = p + M.ldlt().solve(-g);
      clamp(p_try);
      residuals(p_try, r_try);
      const double c_try = r_try.squaredNorm();
      if (std::isfinite(c_try) && c_try < cost) {
        const double drop = cost - c_try;
        const double step = (p_try - p).norm();
        p = p_try;
        r = r_try;
        cost = c_try;
        lambda = std::max(lambda / 3.0, 1e-12);
        improved = true;
        if (drop <= opt.tolerance * cost || step <= opt.tolerance * (p.norm() + opt.tolerance))
          out.converged = true;
        break;
      }
      lambda *= 4.0;
    }
    if (!improved) {
      // No descent direction left: stationary point under the bounds.
      out.converged = true;
      break;
    }
    if (out.converged) break;
  }
  out.iterations = it;

  jacobian(p);
  const Eigen::MatrixXd cov_unscaled = (J.transpose() * J).completeOrthogonalDecomposition().pseudoInverse();
  const double dof = static_cast<double>(n - k);
  const double s2 = cost / dof;
  out.params.assign(p.data(), p.data() + k);
  out.std_errors.resize(k);
  for (std::size_t j = 0; j < k; ++j) out.std_errors[j] = std::sqrt(std::max(0.0, s2 * cov_unscaled(j, j)));
  out.residual_rms = std::sqrt(cost / static_cast<double>(n));
  if (!(out.residual_rms <= opt.max_rms)) out.converged = false;
  return out;
}

namespace detail {

struct Affine {
  double centre = 0.0;
  double scale = 1.0;
  double to(double v) const { return (v - centre) / scale; }
};

inline Affine affine_for(const std::vector<double>& v) {
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  Affine a;
  a.centre = 0.5 * (*lo + *hi);
  a.scale = (*hi - *lo) > 0.0 ? 0.5 * (*hi - *lo) : 1.0;
  return a;
}

inline std::vector<double> apply(const Affine& a, const std::vector<double>& v) {
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = a.to(v[i]);
  return out;
}

/// Frequency (cycles per unit x) of the strongest DFT component of y - mean,
/// scanned on a grid 16x finer than the natural resolution.
inline double dft_peak(const std::vector<double>& x, const std::vector<double>& y) {
  const double mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
  const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
  const double span = *hi - *lo;
  if (!(span > 0.0)) return 0.0;
  const double f_max = 0.5 * static_cast<double>(x.size() - 1) / span;
  const double df = 1.0 / (16.0 * span);
  double best_f = df, best = -1.0;
  for (double fr = df; fr <= f_max; fr += df) {
    std::complex<double> acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) acc += (y[i] - mean) * std::polar(1.0, -kTwoPi * fr * x[i]);
    if (std::abs(acc) > best) {
      best = std::abs(acc);
      best_f = fr;
    }
  }
  return best_f;
}

inline void check_xy(const std::vector<double>& x, const std::vector<double>& y, std::size_t k) {
  if (x.size() != y.size()) throw std::invalid_argument("fit: x and y sizes differ");
  if (x.size() < 2 * k) throw std::invalid_argument("fit: need at least twice as many points as parameters");
  for (std::size_t i = 0; i < x.size(); ++i)
    if (!std::isfinite(x[i]) || !std::isfinite(y[i])) throw std::invalid_argument("fit: non-finite data");
}

}  // namespace detail

/// y = c - depth / (1 + ((x - x0) / (fwhm / 2))^2); parameters x0, fwhm, depth, c.
inline double lorentzian_dip(double x, double x0, double fwhm, double depth, double c) {
  const double u = 2.0 * (x - x0) / fwhm;
  return c - depth / (1.0 + u * u);
}

inline CurveFitResult fit_lorentzian(const std::vector<double>& x, const std::vector<double>& y,
                                     const FitOptions& opt = {}) {
  detail::check_xy(x, y, 4);
  const auto ax = detail::affine_for(x);
  const auto ay = detail::affine_for(y);
  const auto u = detail::apply(ax, x), v = detail::apply(ay, y);

  // Seed: baseline from the larger end, centre at the minimum, width from the half-depth crossings.
  const std::size_t imin = static_cast<std::size_t>(std::min_element(v.begin(), v.end()) - v.begin());
  const double base = std::max(v.front(), v.back());
  const double depth = base - v[imin];
  const double half = base - 0.5 * depth;
  std::size_t a = imin, b = imin;
  while (a > 0 && v[a - 1] < half) --a;
  while (b + 1 < v.size() && v[b + 1] < half) ++b;
  double width = u[b] - u[a];
  if (!(width > 0.0)) width = u[std::min(imin + 1, u.size() - 1)] - u[imin > 0 ? imin - 1 : 0];
  if (!(width > 0.0)) width = 0.1;

  auto model = [](double xx, const std::vector<double>& p) { return lorentzian_dip(xx, p[0], p[1], p[2], p[3]); };
  const double inf = std::numeric_limits<double>::infinity();
  auto r = levenberg_marquardt(model, u, v, {u[imin], width, depth, base}, {-inf, 1e-12, -inf, -inf},
                               {inf, inf, inf, inf}, FitOptions{opt.max_iterations, opt.tolerance, inf});
  CurveFitResult out = r;
  out.names = {"f0", "fwhm", "depth", "offset"};
  out.params = {ax.centre + ax.scale * r.params[0], ax.scale * r.params[1], ay.scale * r.params[2],
                ay.centre + ay.scale * r.params[3]};
  out.std_errors = {ax.scale * r.std_errors[0], ax.scale * r.std_errors[1], ay.scale * r.std_errors[2],
                    ay.scale * r.std_errors[3]};
  out.residual_rms = ay.scale * r.residual_rms;
  out.converged = r.converged && out.residual_rms <= opt.max_rms;
  return out;
}

/// y = a exp(-gamma t) cos(2 pi f t) + c. Reports a, f, tau = 1/gamma
/// (infinite when gamma = 0), c and t_pi = 1/(2f).
inline CurveFitResult fit_damped_sine(const std::vector<double>& t, const std::vector<double>& y,
                                      const FitOptions& opt = {}) {
  detail::check_xy(t, y, 4);
  const auto tlo = std::min_element(t.begin(), t.end());
  const double t_max = *std::max_element(t.begin(), t.end());
  const double ts = t_max > 0.0 ? t_max : 1.0;
  const auto ay = detail::affine_for(y);
  std::vector<double> u(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) u[i] = t[i] / ts;
  const auto v = detail::apply(ay, y);

  const double f0 = detail::dft_peak(u, v);
  const double c0 = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  const std::size_t i0 = static_cast<std::size_t>(tlo - t.begin());
  double a0 = v[i0] - c0;
  if (a0 == 0.0) a0 = 1.0;

  auto model = [](double tt, const std::vector<double>& p) {
    return p[0] * std::exp(-p[2] * tt) * std::cos(kTwoPi * p[1] * tt) + p[3];
  };
  const double inf = std::numeric_limits<double>::infinity();
  auto r = levenberg_marquardt(model, u, v, {a0, f0, 0.1, c0}, {-inf, 0.0, 0.0, -inf}, {inf, inf, inf, inf},
                               FitOptions{opt.max_iterations, opt.tolerance, inf});
  CurveFitResult out;
  out.converged = r.converged;
  out.iterations = r.iterations;
  const double a = ay.scale * r.params[0], ea = ay.scale * r.std_errors[0];
  const double f = r.params[1] / ts, ef = r.std_errors[1] / ts;
  const double g = r.params[2] / ts, eg = r.std_errors[2] / ts;
  const double c = ay.centre + ay.scale * r.params[3], ec = ay.scale * r.std_errors[3];
  const double tau = g > 0.0 ? 1.0 / g : std::numeric_limits<double>::infinity();
  const double etau = g > 0.0 ? eg / (g * g) : std::numeric_limits<double>::infinity();
  const double tpi = f > 0.0 ? 0.5 / f : std::numeric_limits<double>::infinity();
  const double etpi = f > 0.0 ? 0.5 * ef / (f * f) : std::numeric_limits<double>::infinity();
  out.names = {"amplitude", "frequency_hz", "tau_s", "offset", "t_pi_s"};
  out.params = {a, f, tau, c, tpi};
  out.std_errors = {ea, ef, etau, ec, etpi};
  out.residual_rms = ay.scale * r.residual_rms;
  out.converged = r.converged && out.residual_rms <= opt.max_rms;
  return out;
}

/// y = a exp(-(T / T2)^p) with p in [0.5, 3]. `censored` is set when the
/// fitted T2 exceeds the largest sampled T.
inline CurveFitResult fit_stretched_exp(const std::vector<double>& T, const std::vector<double>& y,
                                        const FitOptions& opt = {}) {
  detail::check_xy(T, y, 3);
  for (double v : T)
    if (v < 0.0) throw std::invalid_argument("fit_stretched_exp: negative T");
  const double t_max = *std::max_element(T.begin(), T.end());
  if (!(t_max > 0.0)) throw std::invalid_argument("fit_stretched_exp: need positive T values");

  // Seed: a from the earliest point, then linear regression of ln(-ln(y/a)) on ln T.
  const std::size_t i0 = static_cast<std::size_t>(std::min_element(T.begin(), T.end()) - T.begin());
  double a0 = std::max(y[i0], *std::max_element(y.begin(), y.end()));
  if (!(a0 > 0.0)) a0 = 1.0;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int m = 0;
  for (std::size_t i = 0; i < T.size(); ++i) {
    const double q = y[i] / a0;
    if (T[i] > 0.0 && q > 0.05 && q < 0.95) {
      const double lx = std::log(T[i]), ly = std::log(-std::log(q));
      sx += lx; sy += ly; sxx += lx * lx; sxy += lx * ly;
      ++m;
    }
  }
  double p0 = 1.0, lnT2 = std::log(10.0 * t_max);
  if (m >= 2 && m * sxx - sx * sx > 0.0) {
    const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    const double icpt = (sy - slope * sx) / m;
    p0 = std::clamp(slope, 0.5, 3.0);
    lnT2 = -icpt / slope;
    if (!std::isfinite(lnT2)) lnT2 = std::log(t_max);
  } else if (m == 1) {
    lnT2 = std::log(t_max);
  }
  // Fit on T / t_max with ln T2 as the parameter.
  std::vector<double> u(T.size());
  for (std::size_t i = 0; i < T.size(); ++i) u[i] = T[i] / t_max;
  const double ln_scale = std::log(t_max);
  auto model = [](double tt, const std::vector<double>& p) {
    return p[0] * std::exp(-std::pow(tt * std::exp(-p[1]), p[2]));
  };
  const double inf = std::numeric_limits<double>::infinity();
  auto r = levenberg_marquardt(model, u, y, {a0, std::clamp(lnT2 - ln_scale, -20.0, 14.0), p0},
                               {0.0, -20.0, 0.5}, {inf, 14.0, 3.0},
                               FitOptions{opt.max_iterations, opt.tolerance, inf});
  CurveFitResult out;
  out.iterations = r.iterations;
  const double t2 = std::exp(r.params[1] + ln_scale);
  out.names = {"amplitude", "T2_s", "p"};
  out.params = {r.params[0], t2, r.params[2]};
  out.std_errors = {r.std_errors[0], t2 * r.std_errors[1], r.std_errors[2]};
  out.residual_rms = r.residual_rms;
  out.converged = r.converged && out.residual_rms <= opt.max_rms;
  out.censored = t2 > t_max;
  return out;
}

/// y = A sin(k B). Seeds from a cubic regression (sweeps shorter than a
/// period) and from the DFT peak; keeps the lower-cost result.
inline CurveFitResult fit_sine(const std::vector<double>& B, const std::vector<double>& y,
                               const FitOptions& opt = {}) {
  detail::check_xy(B, y, 2);
  double bs = 0.0;
  for (double b : B) bs = std::max(bs, std::abs(b));
  if (!(bs > 0.0)) throw std::invalid_argument("fit_sine: all field values are zero");
  double ys = 0.0;
  for (double v : y) ys = std::max(ys, std::abs(v));
  if (!(ys > 0.0)) ys = 1.0;
  std::vector<double> u(B.size()), v(y.size());
  for (std::size_t i = 0; i < B.size(); ++i) {
    u[i] = B[i] / bs;
    v[i] = y[i] / ys;
  }
  auto model = [](double bb, const std::vector<double>& p) { return p[0] * std::sin(p[1] * bb); };
  const double inf = std::numeric_limits<double>::infinity();
  const FitOptions inner{opt.max_iterations, opt.tolerance, inf};

  std::vector<std::vector<double>> seeds;
  {
    // least squares on y = c1 u + c3 u^3
    double s11 = 0, s13 = 0, s33 = 0, t1 = 0, t3 = 0;
    for (std::size_t i = 0; i < u.size(); ++i) {
      const double a = u[i], c = a * a * a;
      s11 += a * a; s13 += a * c; s33 += c * c; t1 += a * v[i]; t3 += c * v[i];
    }
    const double det = s11 * s33 - s13 * s13;
    if (det > 0.0) {
      const double c1 = (t1 * s33 - t3 * s13) / det;
      const double c3 = (s11 * t3 - s13 * t1) / det;
      if (c1 != 0.0 && c3 / c1 < 0.0) {
        const double k = std::sqrt(-6.0 * c3 / c1);
        seeds.push_back({c1 / k, k});
      }
    }
    const double f = detail::dft_peak(u, v);
    if (f > 0.0) {
      const double k = kTwoPi * f;
      double num = 0.0, den = 0.0;
      for (std::size_t i = 0; i < u.size(); ++i) {
        num += v[i] * std::sin(k * u[i]);
        den += std::sin(k * u[i]) * std::sin(k * u[i]);
      }
      seeds.push_back({den > 0.0 ? num / den : 1.0, k});
    }
    if (seeds.empty()) seeds.push_back({1.0, 1.0});
  }
  CurveFitResult best;
  double best_rms = inf;
  for (const auto& s : seeds) {
    auto r = levenberg_marquardt(model, u, v, s, {-inf, 0.0}, {inf, inf}, inner);
    if (r.residual_rms < best_rms) {
      best_rms = r.residual_rms;
      best = r;
    }
  }
  // Canonical sign: k > 0 always; A carries the sign.
  CurveFitResult out;
  out.iterations = best.iterations;
  const double A = ys * best.params[0], k = best.params[1] / bs;
  const double eA = ys * best.std_errors[0], ek = best.std_errors[1] / bs;
  const double slope = A * k;
  const double eslope = std::hypot(eA * k, A * ek);
  out.names = {"amplitude", "k_per_T", "slope_at_origin"};
  out.params = {A, k, slope};
  out.std_errors = {eA, ek, eslope};
  out.residual_rms = ys * best.residual_rms;
  out.converged = best.converged && out.residual_rms <= opt.max_rms;
  return out;
}

}  // namespace nvmag
