#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "nvmag/experiments.hpp"

using namespace nvmag;

namespace {

const double kOmega = kPi / 48e-9;

EnsembleSample ensemble(std::size_t n, const NoiseModel& noise = {}, std::uint64_t seed = 3) {
  return sample_ensemble(DetectionVolume{}, DriveField::uniform(kOmega), noise, n, seed);
}

std::vector<double> rabi_durations() {
  std::vector<double> t;
  for (int i = 0; i <= 100; ++i) t.push_back(i * 5e-9);
  return t;
}

}  // namespace

TEST(Experiments, SensitivityArithmetic) {
  const auto r = sensitivity_eq2(89.4e-6, 320000.0, 1.47e-3);
  EXPECT_NEAR(r.eta / 1.071e-11, 1.0, 1e-3);
  EXPECT_NEAR(r.eta / 10.8e-12, 1.0, 0.015);
  EXPECT_NEAR(sensitivity_eq2(2 * 89.4e-6, 320000.0, 1.47e-3).eta, 2 * r.eta, 1e-24);
  EXPECT_NEAR(sensitivity_eq2(89.4e-6, 320000.0, 4 * 1.47e-3).eta, 2 * r.eta, 1e-24);
  EXPECT_NEAR(sensitivity_eq2(89.4e-6, -320000.0, 1.47e-3).eta, r.eta, 1e-24);
  EXPECT_THROW(sensitivity_eq2(89.4e-6, 0.0, 1.47e-3), std::invalid_argument);
  EXPECT_THROW(sensitivity_eq2(-1.0, 1.0, 1.47e-3), std::invalid_argument);
}

TEST(Experiments, ResolutionArithmetic) {
  const auto pts = resolution_vs_time(89.4e-6, 320000.0, 1.47e-3, {1, 100, 50000});
  EXPECT_NEAR(pts[0].min_field, 2.79e-10, 0.005e-10);
  EXPECT_NEAR(pts[2].elapsed, 73.5, 1e-9);
  std::vector<double> t, b;
  for (const auto& p : pts) {
    t.push_back(p.elapsed);
    b.push_back(p.min_field);
  }
  EXPECT_NEAR(loglog_slope(t, b), -0.5, 1e-12);
  EXPECT_THROW(resolution_vs_time(1.0, 1.0, 1.0, {0}), std::invalid_argument);
}

TEST(Experiments, LogCountsAndGrid) {
  const auto c = log_counts(100, 100000, 1);
  EXPECT_EQ(c, (std::vector<std::size_t>{100, 1000, 10000, 100000}));
  const auto g = symmetric_grid(4e-8, 20);
  EXPECT_EQ(g.size(), 21u);
  EXPECT_EQ(g[10], 0.0);
  EXPECT_DOUBLE_EQ(g.front(), -4e-8);
  EXPECT_DOUBLE_EQ(g.back(), 4e-8);
}

TEST(Experiments, ResolutionPipelineScaling) {
  const ReadoutModel m;
  const auto r = measure_resolution(0.5, 0.5, m, 320000.0, 1.47e-3, log_counts(100, 10000, 2), 400000, 6);
  EXPECT_NEAR(r.slope, -0.5, 0.05);
  EXPECT_NEAR(r.single_shot_std / analytic_delta_s(m), 1.0, 0.01);
  for (std::size_t i = 0; i < r.measured.size(); ++i)
    EXPECT_NEAR(r.measured[i].min_field / r.ideal[i].min_field, 1.0, 0.35);
  EXPECT_THROW(measure_resolution(0.5, 0.5, m, 1.0, 1.0, {1000}, 1500, 1), std::invalid_argument);
}

TEST(Experiments, OdmrDipPositions) {
  OdmrModel m;
  const auto dips = odmr_dips(m);
  ASSERT_EQ(dips.size(), 8u);
  const double lower = m.zfs - m.gamma * m.bias_field;
  EXPECT_NEAR(lower, 2.8140e9, 0.0001e9);
  EXPECT_LT(std::abs(lower - 2.8088e9), 6e6);
  double aligned = 0.0, other = 0.0;
  for (const auto& d : dips) {
    if (d.aligned) aligned = std::max(aligned, d.frequency - m.zfs);
    else other = std::max(other, d.frequency - m.zfs);
  }
  EXPECT_NEAR(aligned / other, 3.0, 1e-12);
  m.bias_field = 0.0;
  for (const auto& d : odmr_dips(m)) EXPECT_EQ(d.frequency, m.zfs);
}

TEST(Experiments, OdmrFitLocatesAlignedDip) {
  const OdmrModel m;
  std::vector<double> f;
  for (int i = 0; i <= 800; ++i) f.push_back(2.78e9 + i * 0.15e6);
  const auto r = run_odmr(f, m);
  ASSERT_TRUE(r.fit.converged);
  EXPECT_NEAR(r.fit.value("f0"), r.expected_dip, 0.1e6);
  EXPECT_NEAR(r.fit.value("fwhm"), m.linewidth, 0.05 * m.linewidth);
  EXPECT_THROW(odmr_spectrum({2.9e9, 2.8e9}, m), std::invalid_argument);
}

TEST(Experiments, RabiHomogeneousPiTime) {
  const auto r = run_rabi(rabi_durations(), ensemble(200));
  EXPECT_NEAR(r.population[0], 1.0, 1e-12);
  ASSERT_TRUE(r.fit.converged);
  EXPECT_NEAR(r.fit.value("t_pi_s"), 48e-9, 0.5e-9);
}

TEST(Experiments, RabiDecayShortensWithSpread) {
  double prev = std::numeric_limits<double>::infinity();
  for (double spread : {0.02, 0.05, 0.1}) {
    NoiseModel noise;
    noise.amplitude.sigma = spread;
    const auto r = run_rabi(rabi_durations(), ensemble(4000, noise));
    const double tau = r.fit.value("tau_s");
    EXPECT_TRUE(std::isfinite(tau));
    EXPECT_LT(tau, prev) << spread;
    prev = tau;
  }
}

TEST(Experiments, EchoCalibrationRoundTrip) {
  const auto bath = calibrate_bath(9e-6, 10e-6);
  const auto r = run_coherence(SequenceFamily::hahn_echo, 1, coherence_sweep(30e-6, 30), ensemble(3000), bath);
  ASSERT_TRUE(r.fit.converged);
  EXPECT_NEAR(r.fit.value("T2_s") / 9e-6, 1.0, 0.05);
  for (std::size_t i = 0; i < r.signal.size(); ++i) EXPECT_NEAR(r.signal[i], r.analytic[i], 0.05);
}

TEST(Experiments, NoBathIsCensored) {
  const auto r = run_coherence(SequenceFamily::xy16, 1, coherence_sweep(50e-6, 10), ensemble(50), OUBath{0.0, 10e-6});
  for (double s : r.signal) EXPECT_NEAR(s, 1.0, 1e-9);
  EXPECT_TRUE(r.fit.censored);
}

TEST(Experiments, AcSequenceTiming) {
  AcSenseSetup s;
  const auto seq = ac_sequence(s);
  EXPECT_EQ(seq.pi_pulse_count(), 240u);
  EXPECT_NEAR(seq.total_free_time(), 240.0 / (2.0 * 362e3), 1e-15);
  EXPECT_LT(s.spacing_mismatch(), 1e-15);
  s.tau = 1.01 * 0.5 / s.f_ac;
  EXPECT_NEAR(s.spacing_mismatch(), 0.01, 1e-12);
  s.family = SequenceFamily::ramsey;
  EXPECT_THROW(ac_sequence(s), std::invalid_argument);
}

TEST(Experiments, AcPhaseOracleForIdealPulses) {
  AcSenseSetup s;
  s.repeats = 2;
  const auto e = ensemble(20);
  const double T = ac_sequence(s).total_free_time();
  for (double b : {5e-8, 2e-7}) {
    s.amplitudes = {b};
    const auto pops = ac_populations(s, e, OUBath{0.0, 10e-6});
    const double phi = std::asin(pops.branches[0].normalized());
    EXPECT_NEAR(phi / ac_phase_oracle(b, T), 1.0, 0.01) << b;
  }
}

TEST(Experiments, AcMagnetometryPipeline) {
  AcSenseSetup s;
  s.amplitudes = symmetric_grid(4e-8, 11);
  s.shots = 1000;
  s.zero_field_shots = 10000;
  s.seed = 21;
  const auto bath = calibrate_bath(9e-6, 10e-6);
  NoiseModel noise;
  noise.quasi_static.sigma_delta = sigma_from_t2star(150e-9);
  const auto e = ensemble(300, noise);
  const ReadoutModel model;
  const auto pops = ac_populations(s, e, bath);
  const auto r = ac_readout(pops, s, model);

  // Odd response: zero field leaves only the Monte Carlo spread of the spin sample.
  EXPECT_LT(std::abs(pops.zero_field.normalized()), 4.0 / std::sqrt(static_cast<double>(e.size())));
  EXPECT_NEAR(r.mean_signal[5], model.v0 * model.contrast * pops.branches[5].normalized(), 5.0 * r.signal_sem[5]);
  const auto quiet = ac_populations(s, ensemble(50), OUBath{0.0, 10e-6});
  EXPECT_NEAR(quiet.zero_field.normalized(), 0.0, 1e-12);

  // Numerical slope at the origin of the noiseless curve vs the sine fit.
  AcSenseSetup d = s;
  const double h = 1e-10;
  d.amplitudes = {-h, h};
  const auto dp = ac_populations(d, e, bath);
  const double numeric = model.v0 * model.contrast * (dp.branches[1].normalized() - dp.branches[0].normalized()) / (2 * h);
  ASSERT_TRUE(r.fit.converged);
  EXPECT_NEAR(r.fit.value("slope_at_origin") / numeric, 1.0, 0.02);

  // Sensitivity from the measured noise and slope.
  const double eta = r.delta_s / std::abs(r.fit.value("slope_at_origin")) * std::sqrt(s.t_seq);
  EXPECT_NEAR(r.report.eta, eta, 1e-12 * eta);
  EXPECT_NEAR(r.delta_s / analytic_delta_s(model), 1.0, 0.05);

  // Same inputs, same numbers.
  const auto again = ac_readout(pops, s, model);
  EXPECT_EQ(again.mean_signal, r.mean_signal);
  EXPECT_EQ(again.delta_s, r.delta_s);
}

TEST(Experiments, SineZeroCrossingsEquallySpaced) {
  AcSenseSetup s;
  s.repeats = 2;
  const auto e = ensemble(10);
  s.amplitudes = symmetric_grid(2e-6, 401);
  const auto pops = ac_populations(s, e, OUBath{0.0, 10e-6});
  std::vector<double> zeros;
  for (std::size_t i = 1; i < pops.branches.size(); ++i) {
    const double a = pops.branches[i - 1].normalized(), b = pops.branches[i].normalized();
    if (a == 0.0 || a * b < 0.0) {
      const double x0 = s.amplitudes[i - 1], x1 = s.amplitudes[i];
      zeros.push_back(a == 0.0 ? x0 : x0 - a * (x1 - x0) / (b - a));
    }
  }
  ASSERT_GE(zeros.size(), 3u);
  const double gap = zeros[1] - zeros[0];
  for (std::size_t i = 2; i < zeros.size(); ++i) EXPECT_NEAR(zeros[i] - zeros[i - 1], gap, 0.02 * gap);
  const double period_field = kPi / (ac_phase_oracle(1.0, ac_sequence(s).total_free_time()));
  EXPECT_NEAR(gap / period_field, 1.0, 0.02);
}
