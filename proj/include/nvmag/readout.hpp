#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "nvmag/random.hpp"

namespace nvmag {

/// Window-level photodetector model. One shot produces four integrated
/// windows: S1/R1 for the +pi/2 readout branch and S2/R2 for the -pi/2 branch.
struct ReadoutModel {
  double v0 = 1.426;             // V, baseline fluorescence level
  double contrast = 0.02;        // C
  double s_window = 10e-6;       // s
  double r_window = 50e-6;       // s
  double laser_pulse = 400e-6;   // s
  double shot_noise_v = 57.7e-6; // V, per S window
  double laser_fluct_rel = 0.0;  // relative sd of the per-shot common laser factor
  double branch_drift_v = 0.0;   // V, sd of an additive per-branch offset common to S and R
  double flicker_v = 0.0;        // V, sd of slow correlated offset (see ShotSimulator)

  /// Shot-noise sd of an R window: the per-window noise scales as 1/sqrt(width).
  double r_noise_v() const { return shot_noise_v * std::sqrt(s_window / r_window); }

  void check() const {
    if (!(contrast > 0.0 && contrast < 1.0)) throw std::invalid_argument("contrast must lie in (0, 1)");
    if (!(v0 > 0.0)) throw std::invalid_argument("v0 must be positive");
    if (!(s_window > 0.0) || !(r_window > 0.0) || !(laser_pulse > 0.0))
      throw std::invalid_argument("window widths must be positive");
    if (s_window + r_window > laser_pulse) throw std::invalid_argument("S and R windows must fit in the laser pulse");
    if (shot_noise_v < 0.0 || laser_fluct_rel < 0.0 || branch_drift_v < 0.0 || flicker_v < 0.0)
      throw std::invalid_argument("noise levels must be non-negative");
  }
};

struct WindowRecord {
  double s1 = 0.0, r1 = 0.0, s2 = 0.0, r2 = 0.0;
};

/// Common-mode perturbations of one shot.
struct ShotPerturbation {
  double laser = 0.0;   // lambda
  double drift1 = 0.0;  // V, added to S1 and R1
  double drift2 = 0.0;  // V, added to S2 and R2
};

/// Noise-free windows for given branch populations and perturbations.
inline WindowRecord expected_windows(double p0_plus, double p0_minus, const ReadoutModel& m,
                                     const ShotPerturbation& e = {}) {
  const double level = m.v0 * (1.0 + e.laser);
  return {level * (1.0 - m.contrast * (1.0 - p0_plus)) + e.drift1, level + e.drift1,
          level * (1.0 - m.contrast * (1.0 - p0_minus)) + e.drift2, level + e.drift2};
}

/// One shot: draws lambda, per-branch drifts and per-window shot noise (in
/// that order, always, so streams stay aligned when a knob is set to zero).
inline WindowRecord simulate_windows(double p0_plus, double p0_minus, const ReadoutModel& m, RngStream& rng) {
  if (!(p0_plus >= 0.0 && p0_plus <= 1.0 && p0_minus >= 0.0 && p0_minus <= 1.0))
    throw std::invalid_argument("populations must lie in [0, 1]");
  ShotPerturbation e;
  e.laser = m.laser_fluct_rel * rng.normal();
  e.drift1 = m.branch_drift_v * rng.normal();
  e.drift2 = m.branch_drift_v * rng.normal();
  WindowRecord w = expected_windows(p0_plus, p0_minus, m, e);
  const double rs = m.r_noise_v();
  w.s1 += m.shot_noise_v * rng.normal();
  w.r1 += rs * rng.normal();
  w.s2 += m.shot_noise_v * rng.normal();
  w.r2 += rs * rng.normal();
  return w;
}

/// S = (S1 - R1) - (S2 - R2)
inline double process_eq1(const WindowRecord& w) { return (w.s1 - w.r1) - (w.s2 - w.r2); }

enum class Processing {
  two_branch,      // full (S1 - R1) - (S2 - R2)
  no_reference,    // S1 - S2
  no_branch,       // S1 - R1
};

inline double process(const WindowRecord& w, Processing mode) {
  switch (mode) {
    case Processing::two_branch: return process_eq1(w);
    case Processing::no_reference: return w.s1 - w.s2;
    case Processing::no_branch: return w.s1 - w.r1;
  }
  return process_eq1(w);
}

inline double normalized_signal(double raw_s, const ReadoutModel& m) { return raw_s / (m.v0 * m.contrast); }

/// Slow detector offset: a sum of AR(1) octaves (correlation times of 1, 2,
/// 4, ... shots), giving an approximately 1/f spectrum over the covered band.
/// Each branch sees the same offset in S and R, scaled by flicker_v overall.
class FlickerSource {
 public:
  FlickerSource() = default;
  explicit FlickerSource(double sd, unsigned octaves = 20) : sd_(sd), state_(octaves, 0.0) {
    for (unsigned k = 0; k < octaves; ++k) {
      const double a = std::exp(-1.0 / std::ldexp(1.0, static_cast<int>(k)));
      decay_.push_back(a);
      drive_.push_back(std::sqrt(1.0 - a * a));
    }
  }

  double next(RngStream& rng) {
    if (sd_ == 0.0 || state_.empty()) return 0.0;
    double sum = 0.0;
    for (std::size_t k = 0; k < state_.size(); ++k) {
      state_[k] = decay_[k] * state_[k] + drive_[k] * rng.normal();
      sum += state_[k];
    }
    return sd_ * sum / std::sqrt(static_cast<double>(state_.size()));
  }

 private:
  double sd_ = 0.0;
  std::vector<double> state_, decay_, drive_;
};

/// Shot series generator for a fixed pair of branch populations.
class ShotSimulator {
 public:
  ShotSimulator(double p0_plus, double p0_minus, const ReadoutModel& m, std::uint64_t seed)
      : p_plus_(p0_plus), p_minus_(p0_minus), model_(m), rng_(seed),
        flicker_rng_(mix64(seed ^ 0x5bd1e995u)), flicker1_(m.flicker_v), flicker2_(m.flicker_v) {
    model_.check();
  }

  WindowRecord next() {
    WindowRecord w = simulate_windows(p_plus_, p_minus_, model_, rng_);
    if (model_.flicker_v > 0.0) {
      const double f1 = flicker1_.next(flicker_rng_);
      const double f2 = flicker2_.next(flicker_rng_);
      w.s1 += f1;
      w.r1 += f1;
      w.s2 += f2;
      w.r2 += f2;
    }
    return w;
  }

 private:
  double p_plus_, p_minus_;
  ReadoutModel model_;
  RngStream rng_;
  RngStream flicker_rng_;
  FlickerSource flicker1_, flicker2_;
};

}  // namespace nvmag
