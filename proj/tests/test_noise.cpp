#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <limits>
#include <vector>

#include "nvmag/noise.hpp"

using namespace nvmag;

namespace {

struct Segment {
  double a, b;
  int sign;
};

// Toggling function y(t) of an ideal pi-pulse sequence as signed segments.
std::vector<Segment> toggling(const PulseSequence& seq) {
  const auto t = pulse_times(seq);
  std::vector<Segment> out;
  double start = 0.0;
  int sign = 1;
  for (double tk : t.times) {
    out.push_back({start, tk, sign});
    start = tk;
    sign = -sign;
  }
  out.push_back({start, t.total, sign});
  return out;
}

// w^2 |int y(t) e^{iwt} dt|^2 from the segment integrals.
double filter_oracle(const PulseSequence& seq, double w) {
  std::complex<double> acc = 0.0;
  for (const auto& s : toggling(seq))
    acc += static_cast<double>(s.sign) * (std::polar(1.0, w * s.b) - std::polar(1.0, w * s.a)) / std::complex<double>(0.0, w);
  return w * w * std::norm(acc);
}

// chi = 1/2 int int y(t) y(s) C(t - s) dt ds with C = b^2 exp(-|t - s| / tau),
// evaluated segment by segment in closed form, plus the static term.
double chi_time_domain(const PulseSequence& seq, double b, double tau, double sigma = 0.0) {
  const auto seg = toggling(seq);
  double chi = 0.0, area = 0.0;
  for (std::size_t i = 0; i < seg.size(); ++i) {
    const double li = seg[i].b - seg[i].a;
    area += seg[i].sign * li;
    for (std::size_t j = 0; j < seg.size(); ++j) {
      double k;
      if (i == j) {
        const double u = li / tau;
        k = 2.0 * tau * tau * (u - 1.0 + std::exp(-u));
      } else {
        const auto& first = i < j ? seg[i] : seg[j];
        const auto& second = i < j ? seg[j] : seg[i];
        const double gap = second.a - first.b;
        k = tau * tau * (1.0 - std::exp(-(first.b - first.a) / tau)) * (1.0 - std::exp(-(second.b - second.a) / tau)) *
            std::exp(-gap / tau);
      }
      chi += 0.5 * b * b * seg[i].sign * seg[j].sign * k;
    }
  }
  return chi + 0.5 * sigma * sigma * area * area;
}

}  // namespace

TEST(Noise, SigmaFromT2Star) {
  EXPECT_DOUBLE_EQ(sigma_from_t2star(150e-9), std::sqrt(2.0) / 150e-9);
  EXPECT_EQ(sigma_from_t2star(std::numeric_limits<double>::infinity()), 0.0);
  EXPECT_THROW(sigma_from_t2star(0.0), std::invalid_argument);
  EXPECT_THROW(sigma_from_t2star(-1e-9), std::invalid_argument);
}

TEST(Noise, OuPathStatistics) {
  const OUBath bath{2.0e5, 10e-6};
  RngStream rng(7);
  const double dt = 1e-6;
  double s2 = 0.0, lag = 0.0;
  std::size_t n = 0, nl = 0;
  for (int rep = 0; rep < 200; ++rep) {
    const auto p = sample_ou_path(bath, 1e-3, dt, rng);
    for (std::size_t k = 0; k < p.size(); ++k) {
      s2 += p[k] * p[k];
      ++n;
      if (k >= 10) {
        lag += p[k] * p[k - 10];
        ++nl;
      }
    }
  }
  const double var = s2 / n, cov = lag / nl;
  EXPECT_NEAR(var / (bath.b * bath.b), 1.0, 0.03);
  EXPECT_NEAR(cov / var, std::exp(-1.0), 0.03);
}

TEST(Noise, OuPathRejectsCoarseStep) {
  RngStream rng(1);
  EXPECT_THROW(sample_ou_path({1e5, 10e-6}, 1e-4, 2e-6, rng), std::invalid_argument);
  EXPECT_THROW(sample_ou_path({1e5, 10e-6}, 1e-7, 2e-7, rng), std::invalid_argument);
  EXPECT_THROW(sample_ou_path({-1.0, 10e-6}, 1e-4, 1e-7, rng), std::invalid_argument);
}

TEST(Noise, ExactOuStepMoments) {
  // Stationary moments over an interval u = h / tau with b = tau = 1:
  // Var(I) = 2 (u - 1 + e^-u), E[I x_h] = 1 - e^-u, Var(x_h) = 1.
  const OUBath bath{1.0, 1.0};
  for (double u : {0.003, 0.4, 3.0}) {
    const OuStep step(bath, u);
    RngStream rng(11);
    double si = 0, sii = 0, sxi = 0, sxx = 0;
    const int n = 200000;
    for (int k = 0; k < n; ++k) {
      OuProcess ou(bath, rng);
      const double i = ou.advance(step, rng);
      si += i;
      sii += i * i;
      sxi += i * ou.value();
      sxx += ou.value() * ou.value();
    }
    const double var_i = sii / n - (si / n) * (si / n);
    EXPECT_NEAR(var_i / (2 * (u - 1 + std::exp(-u))), 1.0, 0.02) << u;
    EXPECT_NEAR(sxi / n, 1 - std::exp(-u), 0.02 * std::max(1.0 - std::exp(-u), 0.05)) << u;
    EXPECT_NEAR(sxx / n, 1.0, 0.02) << u;
    EXPECT_NEAR(step.mean_int, 1 - std::exp(-u), 1e-15);
  }
}

TEST(Noise, OuStepSmallIntervalSeriesIsContinuous) {
  const OUBath bath{1.0, 1.0};
  const OuStep a(bath, 0.0099999), b(bath, 0.0100001);
  EXPECT_NEAR(a.sd_int / b.sd_int, 1.0, 1e-4);
}

TEST(Noise, FilterFunctionMatchesTogglingTransform) {
  for (const auto& seq : {build_ramsey(3e-6), build_hahn_echo(9e-6), build_cpmg(5, 1.3e-6), build_xy8(2, 0.7e-6),
                          build_xy16(3, 2e-6)}) {
    const FilterFunction F(seq);
    for (double w : {1e3, 2.1e5, 1.7e6, 9.3e6, 4.4e7}) {
      EXPECT_NEAR(F(w), filter_oracle(seq, w), 1e-9 * (1.0 + filter_oracle(seq, w))) << seq.label() << " " << w;
      EXPECT_NEAR(F.over_omega2(w) * w * w, F(w), 1e-9 * (1.0 + F(w)));
    }
    const auto t = pulse_times(seq);
    if (!t.times.empty()) EXPECT_NEAR(filter_weight(t.times, t.total, 2.1e5), F(2.1e5), 1e-9);
  }
}

TEST(Noise, FilterWeightValidatesOrder) {
  EXPECT_THROW(filter_weight({2e-6, 1e-6}, 3e-6, 1e5), std::invalid_argument);
  EXPECT_THROW(filter_weight({1e-6, 4e-6}, 3e-6, 1e5), std::invalid_argument);
}

TEST(Noise, DecoherenceMatchesClosedForms) {
  const double b = 4.77e5, tau = 10e-6;
  for (double T : {2e-6, 9e-6, 30e-6}) {
    const double x = T / tau;
    const double echo = b * b * tau * tau * (x - 3 + 4 * std::exp(-x / 2) - std::exp(-x));
    const double fid = b * b * tau * tau * (x - 1 + std::exp(-x));
    EXPECT_NEAR(decoherence_exponent(build_hahn_echo(T), OuSpectrum(b, tau)) / echo, 1.0, 1e-5);
    EXPECT_NEAR(decoherence_exponent(build_ramsey(T), OuSpectrum(b, tau)) / fid, 1.0, 1e-5);
  }
}

TEST(Noise, DecoherenceMatchesTimeDomainDoubleIntegral) {
  const double b = 4.77e5, tau = 10e-6;
  for (const auto& seq : {build_cpmg(4, 5e-6), build_xy4(2, 3e-6), build_xy16(1, 3.2e-6), build_xy8(3, 11e-6)}) {
    const double chi = decoherence_exponent(seq, OuSpectrum(b, tau));
    EXPECT_NEAR(chi / chi_time_domain(seq, b, tau), 1.0, 1e-5) << seq.label();
  }
}

TEST(Noise, StaticSpreadEntersThroughTogglingArea) {
  CoherenceOptions opt;
  const double sigma = sigma_from_t2star(150e-9);
  opt.static_variance = sigma * sigma;
  const auto fid = build_ramsey(150e-9);
  EXPECT_NEAR(coherence_analytic(fid, [](double) { return 0.0; }, opt), std::exp(-1.0), 1e-12);
  EXPECT_NEAR(coherence_analytic(build_hahn_echo(150e-9), [](double) { return 0.0; }, opt), 1.0, 1e-12);
  const double b = 3e5, tau = 10e-6;
  const auto s = build_ramsey(2e-7);
  EXPECT_NEAR(decoherence_exponent(s, OuSpectrum(b, tau), opt) / chi_time_domain(s, b, tau, sigma), 1.0, 1e-5);
}

TEST(Noise, NonIntegrableSpectrumRejected) {
  auto pink = [](double w) { return 1.0 / w; };
  EXPECT_THROW(decoherence_exponent(build_ramsey(1e-6), pink), NumericalError);
  auto brown = [](double w) { return 1e6 / (w * w); };
  EXPECT_THROW(decoherence_exponent(build_ramsey(1e-6), brown), NumericalError);
  EXPECT_NO_THROW(decoherence_exponent(build_hahn_echo(1e-6), brown));
  auto negative = [](double) { return -1.0; };
  EXPECT_THROW(decoherence_exponent(build_hahn_echo(1e-6), negative), NumericalError);
}

TEST(Noise, CalibrationRoundTrip) {
  const auto bath = calibrate_bath(9e-6, 10e-6);
  EXPECT_NEAR(coherence_analytic(build_hahn_echo(9e-6), bath), std::exp(-1.0), 1e-6);
  // Closed-form echo: b^2 tau^2 (x - 3 + 4 e^{-x/2} - e^{-x}) = 1 at x = 0.9.
  const double x = 0.9;
  const double b_oracle = 1.0 / (10e-6 * std::sqrt(x - 3 + 4 * std::exp(-x / 2) - std::exp(-x)));
  EXPECT_NEAR(bath.b / b_oracle, 1.0, 1e-5);
  EXPECT_NEAR(bath.b, 477040.7, 1.0);
}

TEST(Noise, CalibrationRejectsBadInputs) {
  EXPECT_THROW(calibrate_bath(0.0, 10e-6), std::invalid_argument);
  EXPECT_THROW(calibrate_bath(9e-6, -1.0), std::invalid_argument);
  EXPECT_THROW(calibrate_bath(9e-6, 1.0), std::invalid_argument);
}

TEST(Noise, DecouplingExtendsCoherenceTime) {
  const OuSpectrum s(calibrate_bath(9e-6, 10e-6));
  const double echo = coherence_time(SequenceFamily::hahn_echo, 1, s, 9e-6);
  EXPECT_NEAR(echo, 9e-6, 1e-11);
  double prev = echo;
  for (std::size_t n : {1u, 4u, 16u}) {
    const double t = coherence_time(SequenceFamily::xy16, n, s, prev);
    EXPECT_GT(t, prev);
    prev = t;
  }
  // Frozen from an independent closed-form prototype of the same bath.
  EXPECT_NEAR(prev / echo, 36.21, 0.01);
}
