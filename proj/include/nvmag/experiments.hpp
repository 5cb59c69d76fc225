#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "nvmag/constants.hpp"
#include "nvmag/ensemble.hpp"
#include "nvmag/errors.hpp"
#include "nvmag/fit.hpp"
#include "nvmag/noise.hpp"
#include "nvmag/readout.hpp"
#include "nvmag/sequence.hpp"

namespace nvmag {

// ---------------------------------------------------------------------------
// CW-ODMR

struct OdmrModel {
  double bias_field = 2e-3;                     // T, along the aligned NV axis
  double zfs = kZeroFieldSplittingHz;           // Hz
  double gamma = kGammaNvHzPerT;                // Hz/T
  double linewidth = 8e6;                       // Hz, FWHM of each dip
  std::array<double, 2> contrast{0.03, 0.01};   // aligned class, each misaligned class
};

struct OdmrDip {
  double frequency = 0.0;
  double depth = 0.0;
  bool aligned = false;
};

/// Dips at D +- gamma B cos(theta) for the four <111> classes: theta = 0 for
/// the aligned class and arccos(1/3) for the other three.
inline std::vector<OdmrDip> odmr_dips(const OdmrModel& m) {
  const double split_aligned = m.gamma * m.bias_field;
  const double split_other = split_aligned / 3.0;
  std::vector<OdmrDip> dips;
  dips.push_back({m.zfs - split_aligned, m.contrast[0], true});
  dips.push_back({m.zfs + split_aligned, m.contrast[0], true});
  for (int k = 0; k < 3; ++k) {
    dips.push_back({m.zfs - split_other, m.contrast[1], false});
    dips.push_back({m.zfs + split_other, m.contrast[1], false});
  }
  return dips;
}

struct OdmrResult {
  std::vector<double> frequencies;
  std::vector<double> signal;  // normalized fluorescence
  CurveFitResult fit;           // Lorentzian on the aligned lower dip
  double expected_dip = 0.0;
};

inline std::vector<double> odmr_spectrum(const std::vector<double>& freqs, const OdmrModel& m) {
  for (std::size_t i = 1; i < freqs.size(); ++i)
    if (freqs[i] < freqs[i - 1]) throw std::invalid_argument("odmr: frequency sweep must be sorted");
  if (!(m.linewidth > 0.0)) throw std::invalid_argument("odmr: linewidth must be positive");
  const auto dips = odmr_dips(m);
  std::vector<double> out(freqs.size(), 1.0);
  for (std::size_t i = 0; i < freqs.size(); ++i)
    for (const auto& d : dips) out[i] -= d.depth * (1.0 - lorentzian_dip(freqs[i], d.frequency, m.linewidth, 1.0, 1.0));
  return out;
}

/// Spectrum plus a Lorentzian fit restricted to the half-way window between
/// the aligned lower dip and its nearest neighbour.
inline OdmrResult run_odmr(const std::vector<double>& freqs, const OdmrModel& m) {
  OdmrResult r;
  r.frequencies = freqs;
  r.signal = odmr_spectrum(freqs, m);
  const double f_dip = m.zfs - m.gamma * m.bias_field;
  r.expected_dip = f_dip;
  const double sep = (2.0 / 3.0) * m.gamma * std::abs(m.bias_field);
  const double half = sep > 0.0 ? 0.5 * sep : 5.0 * m.linewidth;
  std::vector<double> x, y;
  for (std::size_t i = 0; i < freqs.size(); ++i)
    if (std::abs(freqs[i] - f_dip) <= half) {
      x.push_back(freqs[i]);
      y.push_back(r.signal[i]);
    }
  r.fit = fit_lorentzian(x, y);
  return r;
}

// ---------------------------------------------------------------------------
// Rabi

struct RabiResult {
  std::vector<double> durations;
  std::vector<double> population;
  CurveFitResult fit;  // damped sine; t_pi_s = 1 / (2 f)
};

inline RabiResult run_rabi(const std::vector<double>& durations, const EnsembleSample& ensemble,
                           unsigned threads = 1) {
  RabiResult r;
  r.durations = durations;
  r.population = rabi_populations(durations, ensemble, threads);
  r.fit = fit_damped_sine(durations, r.population);
  return r;
}

// ---------------------------------------------------------------------------
// Coherence sweeps

struct CoherenceResult {
  std::string label;
  std::vector<double> total_time;
  std::vector<double> signal;    // Monte Carlo normalized two-branch signal
  std::vector<double> analytic;  // filter-function prediction
  CurveFitResult fit;             // stretched exponential on the Monte Carlo curve
};

/// Normalized signal vs total free-evolution time for a family member.
/// Readout is in the coherence quadrature, so the signal is the ensemble
/// coherence W(T).
inline CoherenceResult run_coherence(SequenceFamily family, std::size_t count, const std::vector<double>& sweep,
                                     const EnsembleSample& ensemble, const OUBath& bath,
                                     double static_sigma = 0.0, const SimulationOptions& opt = {}) {
  if (sweep.empty()) throw std::invalid_argument("coherence: empty sweep");
  CoherenceResult r;
  r.total_time = sweep;
  CoherenceOptions copt;
  copt.static_variance = static_sigma * static_sigma;
  for (double T : sweep) {
    const auto seq = build_for_total_time(family, count, T);
    if (r.label.empty()) r.label = seq.label();
    r.signal.push_back(run_two_branch(seq, ensemble, bath, AcField{}, opt).normalized());
    r.analytic.push_back(coherence_analytic(seq, bath, copt));
  }
  r.fit = fit_stretched_exp(r.total_time, r.signal);
  return r;
}

/// Evenly spaced sweep (0, t_max] with n points.
inline std::vector<double> coherence_sweep(double t_max, std::size_t n) {
  if (!(t_max > 0.0) || n == 0) throw std::invalid_argument("coherence sweep needs t_max > 0 and n >= 1");
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = t_max * static_cast<double>(i + 1) / static_cast<double>(n);
  return out;
}

// ---------------------------------------------------------------------------
// Sensitivity and resolution

struct SensitivityReport {
  double eta = 0.0;        // T / sqrt(Hz)
  double delta_s = 0.0;    // V
  double max_slope = 0.0;  // V / T
  double t_seq = 0.0;      // s
  std::size_t n_averages = 1;
};

/// eta = delta_s / max|dS/dB| * sqrt(t_seq)
inline SensitivityReport sensitivity_eq2(double delta_s, double max_slope, double t_seq,
                                         std::size_t n_averages = 1) {
  if (max_slope == 0.0) throw std::invalid_argument("sensitivity: zero slope");
  if (!(delta_s > 0.0) || !(t_seq > 0.0)) throw std::invalid_argument("sensitivity: delta_s and t_seq must be positive");
  const double slope = std::abs(max_slope);
  return {delta_s / slope * std::sqrt(t_seq), delta_s, slope, t_seq, n_averages};
}

struct ResolutionPoint {
  std::size_t n_avg = 1;
  double elapsed = 0.0;    // s
  double min_field = 0.0;  // T
};

inline std::vector<ResolutionPoint> resolution_vs_time(double single_shot_std, double max_slope, double t_seq,
                                                       const std::vector<std::size_t>& n_avg) {
  if (max_slope == 0.0) throw std::invalid_argument("resolution: zero slope");
  std::vector<ResolutionPoint> out;
  for (auto m : n_avg) {
    if (m == 0) throw std::invalid_argument("resolution: n_avg must be >= 1");
    out.push_back({m, static_cast<double>(m) * t_seq,
                   single_shot_std / std::sqrt(static_cast<double>(m)) / std::abs(max_slope)});
  }
  return out;
}

/// Least-squares slope of log(y) on log(x).
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("loglog_slope: need >= 2 paired points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx; sy += ly; sxx += lx * lx; sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

/// Logarithmic grid of averaging counts from lo to hi with `per_decade` points per decade.
inline std::vector<std::size_t> log_counts(std::size_t lo, std::size_t hi, int per_decade = 2) {
  if (lo == 0 || hi < lo) throw std::invalid_argument("log_counts: need 1 <= lo <= hi");
  std::vector<std::size_t> out;
  const double a = std::log10(static_cast<double>(lo)), b = std::log10(static_cast<double>(hi));
  const int steps = static_cast<int>(std::round((b - a) * per_decade));
  for (int i = 0; i <= steps; ++i) {
    const auto m = static_cast<std::size_t>(std::llround(std::pow(10.0, a + (b - a) * i / std::max(steps, 1))));
    if (out.empty() || m != out.back()) out.push_back(m);
  }
  return out;
}

struct ResolutionMeasurement {
  std::vector<ResolutionPoint> measured;  // block-average spread / slope
  std::vector<ResolutionPoint> ideal;     // from the measured single-shot spread
  double single_shot_std = 0.0;
  double slope = 0.0;  // log-log slope of measured min field vs elapsed time
};

/// Full pipeline: one shot series of `total_shots` at fixed populations is
/// cut into consecutive blocks of M shots for every M; the spread of block
/// means divided by the slope is the resolvable field at elapsed time M t_seq.
inline ResolutionMeasurement measure_resolution(double p_plus, double p_minus, const ReadoutModel& model,
                                                double max_slope, double t_seq,
                                                const std::vector<std::size_t>& n_avg, std::size_t total_shots,
                                                std::uint64_t seed, Processing mode = Processing::two_branch) {
  if (n_avg.empty()) throw std::invalid_argument("resolution: empty averaging list");
  for (auto m : n_avg)
    if (m == 0 || total_shots / m < 2) throw std::invalid_argument("resolution: each M needs at least two blocks");
  struct Acc {
    std::size_t m;
    double partial = 0.0;
    std::size_t filled = 0;
    double sum = 0.0, sum2 = 0.0;
    std::size_t blocks = 0;
  };
  std::vector<Acc> acc;
  for (auto m : n_avg) acc.push_back({m});
  ShotSimulator sim(p_plus, p_minus, model, seed);
  double s1 = 0.0, s2 = 0.0;
  for (std::size_t i = 0; i < total_shots; ++i) {
    const double s = process(sim.next(), mode);
    s1 += s;
    s2 += s * s;
    for (auto& a : acc) {
      a.partial += s;
      if (++a.filled == a.m) {
        const double mean = a.partial / static_cast<double>(a.m);
        a.sum += mean;
        a.sum2 += mean * mean;
        ++a.blocks;
        a.partial = 0.0;
        a.filled = 0;
      }
    }
  }
  ResolutionMeasurement out;
  const double n = static_cast<double>(total_shots);
  out.single_shot_std = std::sqrt(std::max(0.0, (s2 - s1 * s1 / n) / (n - 1.0)));
  std::vector<double> tx, ty;
  for (const auto& a : acc) {
    const double k = static_cast<double>(a.blocks);
    const double var = std::max(0.0, (a.sum2 - a.sum * a.sum / k) / (k - 1.0));
    ResolutionPoint p{a.m, static_cast<double>(a.m) * t_seq, std::sqrt(var) / std::abs(max_slope)};
    out.measured.push_back(p);
    tx.push_back(p.elapsed);
    ty.push_back(p.min_field);
  }
  out.ideal = resolution_vs_time(out.single_shot_std, max_slope, t_seq, n_avg);
  out.slope = loglog_slope(tx, ty);
  return out;
}

// ---------------------------------------------------------------------------
// AC magnetometry

struct AcSenseSetup {
  SequenceFamily family = SequenceFamily::xy16;
  std::size_t repeats = 15;
  double f_ac = 362e3;      // Hz
  double tau = 0.0;         // s, pulse spacing; 0 selects 1 / (2 f_ac)
  double ac_phase = 0.0;    // rad
  std::vector<double> amplitudes;  // T
  std::size_t shots = 1000;        // per amplitude
  std::size_t zero_field_shots = 10000;
  double t_seq = 1.47e-3;
  std::uint64_t seed = 1;
  Processing processing = Processing::two_branch;

  double spacing() const { return tau > 0.0 ? tau : 0.5 / f_ac; }
  /// Relative mismatch between tau and 1 / (2 f_ac).
  double spacing_mismatch() const { return std::abs(spacing() * 2.0 * f_ac - 1.0); }
};

inline PulseSequence ac_sequence(const AcSenseSetup& s) {
  if (!(s.f_ac > 0.0)) throw std::invalid_argument("ac sensing: f_ac must be positive");
  PulseSequence seq;
  switch (s.family) {
    case SequenceFamily::hahn_echo: seq = build_hahn_echo(2.0 * s.spacing()); break;
    case SequenceFamily::cpmg: seq = build_cpmg(s.repeats, s.spacing()); break;
    case SequenceFamily::xy4: seq = build_xy4(s.repeats, s.spacing()); break;
    case SequenceFamily::xy8: seq = build_xy8(s.repeats, s.spacing()); break;
    case SequenceFamily::xy16: seq = build_xy16(s.repeats, s.spacing()); break;
    case SequenceFamily::ramsey: throw std::invalid_argument("ac sensing needs a pi-pulse train");
  }
  return seq.with_readout(+1, kPhaseY);
}

/// Phase accumulated by a synchronized ideal pi train: (2 / pi) gamma_e B0 T.
inline double ac_phase_oracle(double b0, double total_time) { return 2.0 / kPi * kGammaE * b0 * total_time; }

struct AcPopulations {
  std::vector<double> amplitudes;
  std::vector<BranchPopulations> branches;
  BranchPopulations zero_field;
  double total_time = 0.0;
  std::string label;
};

inline AcPopulations ac_populations(const AcSenseSetup& s, const EnsembleSample& ensemble, const OUBath& bath,
                                    const SimulationOptions& opt = {}) {
  const auto seq = ac_sequence(s);
  AcPopulations out;
  out.amplitudes = s.amplitudes;
  out.total_time = seq.total_free_time();
  out.label = seq.label();
  for (double b : s.amplitudes) out.branches.push_back(run_two_branch(seq, ensemble, bath, {b, s.f_ac, s.ac_phase}, opt));
  out.zero_field = run_two_branch(seq, ensemble, bath, {0.0, s.f_ac, s.ac_phase}, opt);
  return out;
}

struct AcSenseResult {
  std::vector<double> amplitudes;
  std::vector<double> mean_signal;  // V
  std::vector<double> signal_sem;   // V, standard error of each mean
  CurveFitResult fit;               // A sin(k B)
  double delta_s = 0.0;             // V, single-shot spread at zero field
  SensitivityReport report;
  std::vector<WindowRecord> zero_field_shots;
};

/// Readout stage: `shots` shots per amplitude and a zero-field series for
/// the single-shot spread. Seeds are derived per amplitude index.
inline AcSenseResult ac_readout(const AcPopulations& pops, const AcSenseSetup& s, const ReadoutModel& model,
                                bool keep_shots = false) {
  if (pops.amplitudes.size() < 4) throw std::invalid_argument("ac sensing: need at least 4 amplitudes");
  if (s.shots == 0 || s.zero_field_shots < 2) throw std::invalid_argument("ac sensing: need shots >= 1 and zero_field_shots >= 2");
  AcSenseResult r;
  r.amplitudes = pops.amplitudes;
  for (std::size_t i = 0; i < pops.amplitudes.size(); ++i) {
    ShotSimulator sim(pops.branches[i].plus, pops.branches[i].minus, model, substream_seed(s.seed, i, 11));
    double a = 0.0, a2 = 0.0;
    for (std::size_t k = 0; k < s.shots; ++k) {
      const double v = process(sim.next(), s.processing);
      a += v;
      a2 += v * v;
    }
    const double n = static_cast<double>(s.shots);
    r.mean_signal.push_back(a / n);
    r.signal_sem.push_back(s.shots > 1 ? std::sqrt(std::max(0.0, (a2 - a * a / n) / (n - 1.0)) / n) : 0.0);
  }
  {
    ShotSimulator sim(pops.zero_field.plus, pops.zero_field.minus, model, substream_seed(s.seed, 0, 12));
    double a = 0.0, a2 = 0.0;
    for (std::size_t k = 0; k < s.zero_field_shots; ++k) {
      const auto w = sim.next();
      if (keep_shots) r.zero_field_shots.push_back(w);
      const double v = process(w, s.processing);
      a += v;
      a2 += v * v;
    }
    const double n = static_cast<double>(s.zero_field_shots);
    r.delta_s = std::sqrt(std::max(0.0, (a2 - a * a / n) / (n - 1.0)));
  }
  // The single-branch variant carries a constant offset; remove it before the odd-model fit.
  std::vector<double> y = r.mean_signal;
  if (s.processing == Processing::no_branch) {
    double mean = 0.0;
    for (double v : y) mean += v;
    mean /= static_cast<double>(y.size());
    for (auto& v : y) v -= mean;
  }
  r.fit = fit_sine(r.amplitudes, y);
  r.report = sensitivity_eq2(r.delta_s, r.fit.value("slope_at_origin"), s.t_seq, 1);
  return r;
}

inline AcSenseResult run_ac_magnetometry(const AcSenseSetup& s, const EnsembleSample& ensemble, const OUBath& bath,
                                         const ReadoutModel& model, const SimulationOptions& opt = {},
                                         bool keep_shots = false) {
  return ac_readout(ac_populations(s, ensemble, bath, opt), s, model, keep_shots);
}

/// Symmetric amplitude grid [-b_max, b_max] with an odd number of points.
inline std::vector<double> symmetric_grid(double b_max, std::size_t points) {
  if (!(b_max > 0.0) || points < 3) throw std::invalid_argument("amplitude grid needs b_max > 0 and >= 3 points");
  if (points % 2 == 0) ++points;
  std::vector<double> out(points);
  const double h = 2.0 * b_max / static_cast<double>(points - 1);
  for (std::size_t i = 0; i < points; ++i) out[i] = -b_max + h * static_cast<double>(i);
  out[points / 2] = 0.0;
  return out;
}

/// Single-shot spread of the two-branch output from shot noise alone.
inline double analytic_delta_s(const ReadoutModel& m) {
  const double s = m.shot_noise_v, r = m.r_noise_v();
  return std::sqrt(2.0 * (s * s + r * r));
}

}  // namespace nvmag
