#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <concepts>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>

#include "nvmag/constants.hpp"
#include "nvmag/errors.hpp"
#include "nvmag/random.hpp"
#include "nvmag/sequence.hpp"

namespace nvmag {

// Zero-mean Gaussian static detuning per spin; sigma encodes T2*.
struct QuasiStaticSpread {
  double sigma_delta = 0.0;  // rad/s
};

// Ornstein-Uhlenbeck detuning bath, C(t) = b^2 exp(-|t|/tau_c).
struct OUBath {
  double b = 0.0;        // rad/s
  double tau_c = 10e-6;  // s

  void check() const {
    if (!(b >= 0.0) || !(tau_c > 0.0))
      throw std::invalid_argument("OU bath requires b >= 0 and tau_c > 0");
  }
};

// Fractional Rabi-frequency error, fixed per spin: eps ~ N(mean, sigma^2).
struct AmplitudeErrorModel {
  double mean = 0.0;
  double sigma = 0.0;
};

struct NoiseModel {
  QuasiStaticSpread quasi_static;
  OUBath bath;
  AmplitudeErrorModel amplitude;
};

inline double sigma_from_t2star(double t2_star) {
  if (!(t2_star > 0.0)) throw std::invalid_argument("T2* must be positive");
  if (std::isinf(t2_star)) return 0.0;
  return std::sqrt(2.0) / t2_star;
}

/// Grid sample of an OU trajectory using the exact one-step discretisation.
/// Rejects dt > tau_c/10 or dt > duration.
inline std::vector<double> sample_ou_path(const OUBath& bath, double duration, double dt,
                                          RngStream& rng) {
  bath.check();
  if (!(dt > 0.0) || dt > duration || dt > bath.tau_c / 10.0)
    throw std::invalid_argument("sample_ou_path: dt must be <= tau_c/10 and <= duration");
  const auto n = static_cast<std::size_t>(std::floor(duration / dt + 1e-9));
  std::vector<double> path(n + 1);
  const double decay = std::exp(-dt / bath.tau_c);
  const double kick = bath.b * std::sqrt(-std::expm1(-2.0 * dt / bath.tau_c));
  path[0] = bath.b * rng.normal();
  for (std::size_t k = 1; k <= n; ++k) path[k] = path[k - 1] * decay + kick * rng.normal();
  return path;
}

/// Exact joint propagation of an OU value x(t) and its integral over an
/// interval of arbitrary length h. Coefficients depend only on h, so callers
/// precompute one OuStep per distinct interval.
struct OuStep {
  double decay = 1.0;     // e^{-h/tau}
  double mean_int = 0.0;  // tau (1 - e^{-h/tau}), multiplies x0
  double sd_int = 0.0;    // sqrt(Var[I | x0])
  double x_on_int = 0.0;  // regression of x_h on the integral noise
  double sd_x = 0.0;      // residual sd of x_h

  OuStep() = default;
  OuStep(const OUBath& bath, double h) {
    const double tau = bath.tau_c;
    const double u = h / tau;
    const double b2 = bath.b * bath.b;
    decay = std::exp(-u);
    const double one_m = -std::expm1(-u);
    mean_int = tau * one_m;
    // 2u - 3 + 4e^{-u} - e^{-2u}, series for small u to avoid cancellation.
    double g;
    if (u < 1e-2) {
      g = u * u * u * (2.0 / 3.0 + u * (-0.5 + u * (7.0 / 30.0 + u * (-1.0 / 12.0))));
    } else {
      g = 2.0 * u - 3.0 + 4.0 * std::exp(-u) - std::exp(-2.0 * u);
    }
    const double var_i = b2 * tau * tau * g;
    const double var_x = b2 * (-std::expm1(-2.0 * u));
    const double cov = b2 * tau * one_m * one_m;
    sd_int = std::sqrt(std::max(var_i, 0.0));
    x_on_int = sd_int > 0.0 ? cov / sd_int : 0.0;
    sd_x = std::sqrt(std::max(var_x - x_on_int * x_on_int, 0.0));
  }
};

class OuProcess {
 public:
  OuProcess() = default;
  OuProcess(const OUBath& bath, RngStream& rng) : x_(bath.b * rng.normal()) {}

  double value() const { return x_; }

  /// Advances by the step's interval and returns the integral of x over it.
  double advance(const OuStep& step, RngStream& rng) {
    const double z1 = rng.normal();
    const double z2 = rng.normal();
    const double integral = x_ * step.mean_int + step.sd_int * z1;
    x_ = x_ * step.decay + step.x_on_int * z1 + step.sd_x * z2;
    return integral;
  }

 private:
  double x_ = 0.0;
};

// ---------------------------------------------------------------------------
// Filter function

namespace detail {

inline void check_pulse_times(const std::vector<double>& times, double total) {
  double prev = 0.0;
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (!(times[i] > prev) || !(times[i] < total))
      throw std::invalid_argument("filter_weight: pulse times must be strictly increasing in (0, T)");
    prev = times[i];
  }
}

}  // namespace detail

/// |1 + (-1)^(n+1) e^{i w T} + 2 sum_k (-1)^k e^{i w t_k}|^2 for pi pulses at t_k.
inline double filter_weight(const std::vector<double>& pulse_times, double total_T, double omega) {
  detail::check_pulse_times(pulse_times, total_T);
  const std::size_t n = pulse_times.size();
  std::complex<double> sum = 1.0;
  sum += (n % 2 == 0 ? -1.0 : 1.0) * std::polar(1.0, omega * total_T);
  for (std::size_t k = 0; k < n; ++k)
    sum += ((k + 1) % 2 == 0 ? 2.0 : -2.0) * std::polar(1.0, omega * pulse_times[k]);
  return std::norm(sum);
}

/// Filter function of a sequence, evaluated without per-term trig by chaining
/// phasors across the (few distinct) delays.
class FilterFunction {
 public:
  explicit FilterFunction(const PulseSequence& seq) {
    const auto& el = seq.elements();
    // Nodes: t = 0, each pi pulse, t = T. Gaps are the delays between nodes.
    double acc = 0.0;
    coeff_.push_back(1.0);
    node_t_.push_back(0.0);
    int sign = 1;
    for (std::size_t i = 1; i < el.size(); ++i) {
      if (const auto* d = std::get_if<Delay>(&el[i])) {
        acc += d->tau;
      } else {
        const bool last = (i + 1 == el.size());
        gaps_.push_back(acc);
        acc = 0.0;
        node_t_.push_back(node_t_.back() + gaps_.back());
        if (last) {
          coeff_.push_back(-static_cast<double>(sign));
        } else {
          sign = -sign;
          coeff_.push_back(2.0 * sign);
        }
      }
    }
    total_ = node_t_.back();
    // Toggling-function integral, sum_k c_k t_k; F(w) ~ w^2 A^2 near 0.
    area_ = 0.0;
    for (std::size_t k = 0; k < coeff_.size(); ++k) area_ += coeff_[k] * node_t_[k];
    area_ = -area_;
  }

  double total_time() const { return total_; }
  std::size_t pi_count() const { return coeff_.size() - 2; }
  double toggle_integral() const { return area_; }

  double operator()(double omega) const {
    double sr = coeff_[0], si = 0.0;
    double zr = 1.0, zi = 0.0;
    double cr = 1.0, ci = 0.0;
    double last_gap = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t k = 0; k < gaps_.size(); ++k) {
      if (gaps_[k] != last_gap) {
        last_gap = gaps_[k];
        cr = std::cos(omega * last_gap);
        ci = std::sin(omega * last_gap);
      }
      const double nr = zr * cr - zi * ci;
      zi = zr * ci + zi * cr;
      zr = nr;
      sr += coeff_[k + 1] * zr;
      si += coeff_[k + 1] * zi;
    }
    return sr * sr + si * si;
  }

  /// F(w)/w^2 evaluated with cancellation-free terms; used at small w.
  double over_omega2(double omega) const {
    if (omega == 0.0) return area_ * area_;
    double re = 0.0, im = 0.0;
    for (std::size_t k = 0; k < coeff_.size(); ++k) {
      const double x = omega * node_t_[k];
      const double s = std::sin(0.5 * x);
      re += coeff_[k] * (-2.0 * s * s);
      im += coeff_[k] * std::sin(x);
    }
    return (re * re + im * im) / (omega * omega);
  }

 private:
  std::vector<double> coeff_;
  std::vector<double> node_t_;
  std::vector<double> gaps_;
  double total_ = 0.0;
  double area_ = 0.0;
};

// ---------------------------------------------------------------------------
// Analytic coherence

/// Two-sided OU power spectral density 2 b^2 tau_c / (1 + w^2 tau_c^2).
struct OuSpectrum {
  double b = 0.0;
  double tau_c = 1.0;

  explicit OuSpectrum(const OUBath& bath) : b(bath.b), tau_c(bath.tau_c) {}
  OuSpectrum(double b_, double tau_c_) : b(b_), tau_c(tau_c_) {}

  double operator()(double omega) const {
    const double wt = omega * tau_c;
    return 2.0 * b * b * tau_c / (1.0 + wt * wt);
  }
  double corner() const { return 1.0 / tau_c; }
};

template <class S>
concept Spectrum = requires(const S& s, double w) {
  { s(w) } -> std::convertible_to<double>;
};

template <class S>
concept SpectrumWithCorner = Spectrum<S> && requires(const S& s) {
  { s.corner() } -> std::convertible_to<double>;
};

struct CoherenceOptions {
  double static_variance = 0.0;  // sigma_delta^2 of a quasi-static component, (rad/s)^2
  double rel_tol = 1e-6;
};

/// Decoherence exponent chi = (1/2pi) int_0^inf S(w) F(wT)/w^2 dw
///                           + sigma^2 A^2 / 2,
/// with A the toggling-function integral. This normalisation makes a Ramsey
/// sequence under quasi-static Gaussian noise give exactly exp(-sigma^2 t^2/2).
template <Spectrum S>
double decoherence_exponent(const PulseSequence& seq, const S& spectrum,
                            const CoherenceOptions& opt = {}) {
  using boost::math::quadrature::gauss_kronrod;
  const FilterFunction F(seq);
  const double T = F.total_time();
  const double static_part = 0.5 * opt.static_variance * F.toggle_integral() * F.toggle_integral();
  if (!(T > 0.0)) return 0.0;

  auto checked_s = [&](double w) {
    const double v = spectrum(w);
    if (!std::isfinite(v) || v < 0.0)
      throw NumericalError("spectrum returned a negative or non-finite value");
    return v;
  };

  const double seg = kPi / T;
  // Low-frequency integrability: integrand ~ S(w) A^2 (A != 0) or S(w) w^2.
  {
    const bool refocused = std::abs(F.toggle_integral()) <= 1e-12 * T;
    const double p = refocused ? 3.0 : 1.0;
    const double w1 = 1e-6 * seg, w2 = 1e-9 * seg;
    const double q1 = checked_s(w1) * std::pow(w1, p);
    const double q2 = checked_s(w2) * std::pow(w2, p);
    if (q1 > 0.0 && q2 >= 0.5 * q1)
      throw NumericalError("spectrum is not integrable at zero frequency for this sequence");
  }

  auto integrand = [&](double w) {
    const double fw2 = (w * T < 1.0) ? F.over_omega2(w) : F(w) / (w * w);
    return checked_s(w) * fw2;
  };
  // Low-frequency pieces adapt; uniform pi/T pieces hold at most half an
  // oscillation of F and a single 15-point Kronrod rule is exact enough.
  auto piece = [&](double a, double b, unsigned depth = 0) {
    return gauss_kronrod<double, 15>::integrate(integrand, a, b, depth, 1e-10);
  };

  // Breakpoints below the first segment resolve narrow low-frequency spectra.
  double total = 0.0;
  double lo = 0.0;
  if constexpr (SpectrumWithCorner<S>) {
    const double c = spectrum.corner();
    if (c > 0.0 && c < seg) {
      for (double w = 1e-3 * c; w < seg; w *= 10.0) {
        total += piece(lo, w, 8);
        lo = w;
      }
    }
  }
  total += piece(lo, seg, 8);

  // Exact segments of width pi/T up to 32x the highest filter harmonic scale.
  // Past that, F(w) oscillates on a scale much finer than S(w)/w^2 varies, so
  // the tail is its period average sum_k c_k^2 = 2 + 4n times int S/w^2.
  double w_max = 32.0 * kPi * static_cast<double>(F.pi_count() + 1) / T;
  if constexpr (SpectrumWithCorner<S>) w_max = std::max(w_max, 20.0 * spectrum.corner());
  double w = seg;
  while (w < w_max) {
    total += piece(w, w + seg);
    w += seg;
  }
  const double mean_f = 2.0 + 4.0 * static_cast<double>(F.pi_count());
  auto smooth_tail = [&](double from) {
    return mean_f * gauss_kronrod<double, 15>::integrate(
                        [&](double x) { return checked_s(x) / (x * x); }, from,
                        std::numeric_limits<double>::infinity(), 10, 1e-8);
  };
  constexpr int kMaxDoublings = 30;
  for (int it = 0; it < kMaxDoublings; ++it) {
    const double tail = smooth_tail(w);
    if (!std::isfinite(tail)) break;
    if (std::abs(tail) <= 0.1 * opt.rel_tol * std::abs(total) || total == 0.0)
      return (total + tail) / kTwoPi + static_part;
    const double end = 2.0 * w;
    while (w < end) {
      const double b = std::min(w + seg, end);
      total += piece(w, b);
      w = b;
    }
  }
  throw NumericalError("spectrum integral did not converge at high frequency");
}

template <Spectrum S>
double coherence_analytic(const PulseSequence& seq, const S& spectrum,
                          const CoherenceOptions& opt = {}) {
  return std::exp(-decoherence_exponent(seq, spectrum, opt));
}

inline double coherence_analytic(const PulseSequence& seq, const OUBath& bath,
                                 const CoherenceOptions& opt = {}) {
  bath.check();
  if (bath.b == 0.0) return std::exp(-decoherence_exponent(seq, [](double) { return 0.0; }, opt));
  return coherence_analytic(seq, OuSpectrum(bath), opt);
}

/// Total free time at which the analytic coherence of a family member falls to
/// 1/e. Bracket-expands in log T, then refines with TOMS 748.
template <Spectrum S>
double coherence_time(SequenceFamily family, std::size_t count, const S& spectrum,
                      double guess, const CoherenceOptions& opt = {}) {
  auto f = [&](double log_t) {
    const auto seq = build_for_total_time(family, count, std::exp(log_t));
    return decoherence_exponent(seq, spectrum, opt) - 1.0;
  };
  double a = std::log(guess), b = a;
  double fa = f(a), fb = fa;
  int it = 0;
  if (fa < 0.0) {
    do { a = b; fa = fb; b += std::log(2.0); fb = f(b); } while (fb < 0.0 && ++it < 60);
  } else {
    do { b = a; fb = fa; a -= std::log(2.0); fa = f(a); } while (fa > 0.0 && ++it < 60);
  }
  if (!(fa <= 0.0 && fb >= 0.0)) throw NumericalError("coherence_time: could not bracket 1/e crossing");
  std::uintmax_t iters = 100;
  const auto r = boost::math::tools::toms748_solve(f, a, b, fa, fb,
                                                   boost::math::tools::eps_tolerance<double>(40), iters);
  return std::exp(0.5 * (r.first + r.second));
}

/// Largest tau_c / T2 ratio accepted by calibrate_bath. Beyond it the bath is
/// effectively static on the echo time scale and the echo refocuses it.
inline constexpr double kMaxCorrelationToT2 = 1.0e3;

/// OU coupling b giving echo coherence exp(-1) at total time target_T2.
inline OUBath calibrate_bath(double target_T2, double tau_c) {
  if (!(target_T2 > 0.0)) throw std::invalid_argument("calibrate_bath: target T2 must be > 0");
  if (!(tau_c > 0.0)) throw std::invalid_argument("calibrate_bath: tau_c must be > 0");
  if (tau_c > kMaxCorrelationToT2 * target_T2)
    throw std::invalid_argument("calibrate_bath: tau_c too long, bath is quasi-static and the echo refocuses it");
  const auto echo = build_hahn_echo(target_T2);
  auto f = [&](double log_b) {
    return coherence_analytic(echo, OuSpectrum(std::exp(log_b), tau_c)) - std::exp(-1.0);
  };
  // W decreases monotonically in b; bracket [lo, hi] with f(lo) > 0 > f(hi).
  double lo = std::log(1e-2 / target_T2), hi = std::log(1e2 / target_T2);
  double flo = f(lo), fhi = f(hi);
  for (int it = 0; it < 40 && !(flo > 0.0 && fhi < 0.0); ++it) {
    if (flo <= 0.0) { lo -= std::log(10.0); flo = f(lo); }
    if (fhi >= 0.0) { hi += std::log(10.0); fhi = f(hi); }
  }
  if (!(flo > 0.0 && fhi < 0.0)) throw NumericalError("calibrate_bath: bracketing failure");
  std::uintmax_t iters = 200;
  const auto r = boost::math::tools::toms748_solve(f, lo, hi, flo, fhi,
                                                   boost::math::tools::eps_tolerance<double>(34), iters);
  OUBath out;
  out.b = std::exp(0.5 * (r.first + r.second));
  out.tau_c = tau_c;
  return out;
}

}  // namespace nvmag
