#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <variant>
#include <vector>

#include "nvmag/constants.hpp"
#include "nvmag/noise.hpp"
#include "nvmag/parallel.hpp"
#include "nvmag/random.hpp"
#include "nvmag/resonator.hpp"
#include "nvmag/sequence.hpp"
#include "nvmag/spin.hpp"

namespace nvmag {

/// Laser-defined detection cylinder. The axis runs along y (through the
/// sample thickness) from `bottom` to `bottom + depth`, centred at x = centre_x.
struct DetectionVolume {
  double beam_diameter = 30e-6;      // m
  double depth = 0.3e-3;             // m
  double centre_x = 0.0;             // m
  double bottom = 10e-6;             // m, height of the sample face above the conductor plane
  double quoted_volume = 1.4e-12;    // m^3, reported detection volume

  double geometric_volume() const {
    const double r = 0.5 * beam_diameter;
    return kPi * r * r * depth;
  }

  void check() const {
    if (!(beam_diameter > 0.0) || !(depth > 0.0) || !(bottom >= 0.0))
      throw std::invalid_argument("detection volume needs positive diameter and depth");
  }
};

/// Drive amplitude source: a B1 field map (per sqrt(W)) seen by NVs along
/// `nv_axis`, driven with `power`.
struct DriveField {
  FieldMap map;
  Vec3 nv_axis{0.0, 1.0, 0.0};
  double power = 1.0;

  /// Spatially uniform drive with Rabi angular frequency `omega`.
  static DriveField uniform(double omega) {
    DriveField d;
    const double b = 2.0 * omega / kGammaE;
    d.map = FieldMap::uniform({b, 0.0, 0.0});
    return d;
  }

  double rabi_at(Vec3 p) const { return rabi_from_field(map.interpolate(p), nv_axis, kGammaE, power); }
};

struct SpinSample {
  Vec3 position;
  double rabi = 0.0;              // nominal local Omega_i, rad/s
  double static_detuning = 0.0;   // Delta_i, rad/s
  double amp_error = 0.0;         // eps_i; the spin sees Omega_i (1 + eps_i)
  std::uint64_t stream = 0;       // substream id for dynamic noise
};

struct EnsembleSample {
  std::vector<SpinSample> spins;
  std::uint64_t seed = 0;

  std::size_t size() const { return spins.size(); }
};

/// Draws n spins uniformly in the detection cylinder, interpolates Omega_i
/// from the drive map, and samples Delta_i ~ N(0, sigma^2) and eps_i from
/// the amplitude-error model. Each spin uses its own counter-based substream,
/// so the sample is identical for any thread count.
inline EnsembleSample sample_ensemble(const DetectionVolume& volume, const DriveField& field,
                                      const NoiseModel& noise, std::size_t n, std::uint64_t seed,
                                      unsigned threads = 1) {
  if (n == 0) throw std::invalid_argument("sample_ensemble: n must be >= 1");
  volume.check();
  const double r = 0.5 * volume.beam_diameter;
  if (!field.map.covers(volume.centre_x - r, volume.centre_x + r, volume.bottom,
                        volume.bottom + volume.depth, -r, r))
    throw std::invalid_argument("sample_ensemble: field map does not cover the detection volume");

  EnsembleSample out;
  out.seed = seed;
  out.spins.resize(n);
  parallel_for(n, threads, [&](std::size_t i) {
    RngStream rng(substream_seed(seed, i, 0));
    SpinSample s;
    const double rad = r * std::sqrt(rng.uniform());
    const double th = kTwoPi * rng.uniform();
    s.position = {volume.centre_x + rad * std::cos(th), volume.bottom + volume.depth * rng.uniform(),
                  rad * std::sin(th)};
    s.rabi = field.rabi_at(s.position);
    s.static_detuning = noise.quasi_static.sigma_delta * rng.normal();
    double eps = 0.0;
    for (int tries = 0; tries < 64; ++tries) {
      eps = rng.normal(noise.amplitude.mean, noise.amplitude.sigma);
      if (1.0 + eps > 0.0) break;
    }
    if (!(1.0 + eps > 0.0)) throw std::invalid_argument("amplitude error model leaves 1 + eps <= 0");
    s.amp_error = eps;
    s.stream = substream_seed(seed, i, 1);
    if (!(s.rabi > 0.0)) throw std::invalid_argument("sample_ensemble: zero Rabi frequency at a spin position");
    out.spins[i] = s;
  });
  return out;
}

/// AC test field along the NV axis, B(t) = B0 cos(2 pi f t + phase), with t
/// measured from the centre of the first pi/2 pulse. phase = 0 puts the field
/// zero crossings on the pi pulses of a sequence with tau = 1/(2f).
struct AcField {
  double amplitude = 0.0;  // T
  double frequency = 0.0;  // Hz
  double phase = 0.0;      // rad

  double detuning(double t) const {
    return kGammaE * amplitude * std::cos(kTwoPi * frequency * t + phase);
  }
  double integral(double t0, double t1) const {
    if (amplitude == 0.0) return 0.0;
    if (frequency == 0.0) return kGammaE * amplitude * std::cos(phase) * (t1 - t0);
    const double w = kTwoPi * frequency;
    return kGammaE * amplitude / w * (std::sin(w * t1 + phase) - std::sin(w * t0 + phase));
  }
};

enum class PulseMode { ideal, finite };

struct SimulationOptions {
  PulseMode pulse_mode = PulseMode::ideal;
  /// Nominal Rabi angular frequency; finite pulses last angle / nominal_rabi.
  double nominal_rabi = kPi / 48e-9;
  unsigned threads = 1;
  /// Selects the dynamic-noise substreams; distinct sweep points may share it.
  std::uint64_t salt = 1;
};

struct BranchPopulations {
  double plus = 0.0;   // ms = 0 population, readout_sign = +1
  double minus = 0.0;  // readout_sign = -1
  double normalized() const { return plus - minus; }
};

namespace detail {

/// A sequence compiled for one pulse mode: rotations for ideal pulses, drive
/// descriptors for finite pulses, and free intervals with OU step tables.
struct SequencePlan {
  struct Op {
    bool is_pulse = false;
    double t0 = 0.0, t1 = 0.0;  // interval on the timeline
    double phase = 0.0, angle = 0.0;
    double ac_phase = 0.0;      // integral of the AC detuning over [t0, t1]
    Rotation rotation;
    OuStep ou;
  };
  std::vector<Op> ops;  // excludes the final readout pulse
  Pulse readout;
  double readout_t = 0.0;
  double readout_width = 0.0;
  double readout_ac = 0.0;
  OuStep readout_ou;
};

inline SequencePlan compile(const PulseSequence& seq, const OUBath& bath, const AcField& ac,
                            const SimulationOptions& opt) {
  SequencePlan plan;
  const auto& el = seq.elements();
  const bool finite = opt.pulse_mode == PulseMode::finite;
  if (finite && !(opt.nominal_rabi > 0.0)) throw std::invalid_argument("finite pulses need nominal_rabi > 0");
  auto width = [&](const Pulse& p) { return finite ? p.angle / opt.nominal_rabi : 0.0; };

  // Pulse centre times along the centre-to-center timeline.
  std::vector<double> centre(el.size(), 0.0);
  double t = 0.0;
  for (std::size_t i = 0; i < el.size(); ++i) {
    if (const auto* d = std::get_if<Delay>(&el[i])) t += d->tau;
    centre[i] = t;
  }
  auto prev_pulse_end = [&](std::size_t i) {
    for (std::size_t j = i; j-- > 0;)
      if (const auto* p = std::get_if<Pulse>(&el[j])) return centre[j] + 0.5 * width(*p);
    return 0.0;
  };
  auto next_pulse_start = [&](std::size_t i) {
    for (std::size_t j = i + 1; j < el.size(); ++j)
      if (const auto* p = std::get_if<Pulse>(&el[j])) return centre[j] - 0.5 * width(*p);
    return centre.back();
  };

  for (std::size_t i = 0; i + 1 < el.size(); ++i) {
    SequencePlan::Op op;
    if (const auto* p = std::get_if<Pulse>(&el[i])) {
      op.is_pulse = true;
      op.phase = p->phase;
      op.angle = p->angle;
      const double w = width(*p);
      op.t0 = centre[i] - 0.5 * w;
      op.t1 = centre[i] + 0.5 * w;
      if (finite) {
        if (bath.b > 0.0) op.ou = OuStep(bath, w);
      } else {
        op.rotation = Rotation::equatorial(p->phase, p->angle);
      }
    } else {
      // Consecutive delays are merged by taking the span between pulses once.
      if (i > 0 && std::holds_alternative<Delay>(el[i - 1])) continue;
      op.t0 = prev_pulse_end(i);
      op.t1 = next_pulse_start(i);
      if (op.t1 < op.t0 - 1e-15)
        throw std::invalid_argument("finite pulses overlap: delay shorter than the pulse widths");
      op.t1 = std::max(op.t1, op.t0);
      if (bath.b > 0.0) op.ou = OuStep(bath, op.t1 - op.t0);
    }
    op.ac_phase = ac.integral(op.t0, op.t1);
    plan.ops.push_back(op);
  }
  plan.readout = std::get<Pulse>(el.back());
  plan.readout_t = centre.back();
  plan.readout_width = width(plan.readout);
  if (finite && bath.b > 0.0) plan.readout_ou = OuStep(bath, plan.readout_width);
  plan.readout_ac = ac.integral(plan.readout_t - 0.5 * plan.readout_width, plan.readout_t + 0.5 * plan.readout_width);
  return plan;
}

struct SpinContext {
  const SpinSample& spin;
  const OUBath& bath;
  const SimulationOptions& opt;
};

/// Finite pulse with the detuning frozen at its mean over the pulse window.
inline BlochState finite_pulse(const BlochState& v, const SpinContext& c, double w, double ac_phase,
                               double phase, const OuStep& step, OuProcess& ou, RngStream& rng) {
  if (w <= 0.0) return v;
  double det = c.spin.static_detuning + ac_phase / w;
  if (c.bath.b > 0.0) det += ou.advance(step, rng) / w;
  return evolve_driven_exact(v, {c.spin.rabi * (1.0 + c.spin.amp_error), phase, det, w});
}

/// Runs every op except the readout pulse; `skip_first` leaves out the
/// preparation pulse as well (for directly prepared equatorial states).
inline BlochState propagate(const SequencePlan& plan, const SpinContext& c, BlochState v,
                            bool skip_first, OuProcess& ou, RngStream& rng) {
  const bool finite = c.opt.pulse_mode == PulseMode::finite;
  for (std::size_t k = skip_first ? 1 : 0; k < plan.ops.size(); ++k) {
    const auto& op = plan.ops[k];
    if (op.is_pulse) {
      v = finite ? finite_pulse(v, c, op.t1 - op.t0, op.ac_phase, op.phase, op.ou, ou, rng)
                 : op.rotation.apply(v);
    } else {
      double phi = c.spin.static_detuning * (op.t1 - op.t0) + op.ac_phase;
      if (c.bath.b > 0.0) phi += ou.advance(op.ou, rng);
      v = precess(v, phi);
    }
  }
  return v;
}

inline BlochState apply_readout(const SequencePlan& plan, const SpinContext& c, const BlochState& v,
                                const Pulse& pulse, OuProcess ou, RngStream rng) {
  if (c.opt.pulse_mode == PulseMode::ideal) return rotate_ideal(v, pulse.phase, pulse.angle);
  return finite_pulse(v, c, plan.readout_width, plan.readout_ac, pulse.phase, plan.readout_ou, ou, rng);
}

}  // namespace detail

/// Ensemble-averaged ms = 0 populations for the two readout branches of `seq`.
/// Both branches share each spin's noise realisation up to the readout pulse.
inline BranchPopulations run_two_branch(const PulseSequence& seq, const EnsembleSample& ensemble,
                                        const OUBath& bath, const AcField& ac = {},
                                        const SimulationOptions& opt = {}) {
  bath.check();
  const auto plan = detail::compile(seq, bath, ac, opt);
  const Pulse plus = PulseSequence::readout_pulse(+1, seq.readout_phase());
  const Pulse minus = PulseSequence::readout_pulse(-1, seq.readout_phase());
  std::vector<double> pp(ensemble.size()), pm(ensemble.size());
  parallel_for(ensemble.size(), opt.threads, [&](std::size_t i) {
    const auto& s = ensemble.spins[i];
    RngStream rng(substream_seed(s.stream, opt.salt, 2));
    OuProcess ou = bath.b > 0.0 ? OuProcess(bath, rng) : OuProcess();
    const detail::SpinContext c{s, bath, opt};
    const BlochState v = detail::propagate(plan, c, BlochState{}, false, ou, rng);
    pp[i] = population_ms0(detail::apply_readout(plan, c, v, plus, ou, rng));
    pm[i] = population_ms0(detail::apply_readout(plan, c, v, minus, ou, rng));
  });
  BranchPopulations out;
  for (std::size_t i = 0; i < pp.size(); ++i) {
    out.plus += pp[i];
    out.minus += pm[i];
  }
  out.plus /= static_cast<double>(pp.size());
  out.minus /= static_cast<double>(pm.size());
  return out;
}

/// Coherence retained by the pi-pulse train of `seq` for an equatorial state
/// prepared directly at azimuth `initial_phase`: ensemble mean of v_final . v_0.
/// The preparation and readout pi/2 pulses are not applied.
inline double equatorial_coherence(const PulseSequence& seq, const EnsembleSample& ensemble,
                                   const OUBath& bath, double initial_phase,
                                   const SimulationOptions& opt = {}) {
  bath.check();
  const auto plan = detail::compile(seq, bath, AcField{}, opt);
  const BlochState v0{std::cos(initial_phase), std::sin(initial_phase), 0.0};
  std::vector<double> proj(ensemble.size());
  parallel_for(ensemble.size(), opt.threads, [&](std::size_t i) {
    const auto& s = ensemble.spins[i];
    RngStream rng(substream_seed(s.stream, opt.salt, 2));
    OuProcess ou = bath.b > 0.0 ? OuProcess(bath, rng) : OuProcess();
    const detail::SpinContext c{s, bath, opt};
    const BlochState v = detail::propagate(plan, c, v0, true, ou, rng);
    proj[i] = v.x * v0.x + v.y * v0.y + v.z * v0.z;
  });
  double sum = 0.0;
  for (double p : proj) sum += p;
  return sum / static_cast<double>(proj.size());
}

/// Ensemble-averaged ms = 0 population after a single resonant x pulse of each
/// (sorted) duration, starting from ms = 0. Each spin sees Omega_i (1 + eps_i)
/// and its static detuning; propagation continues from one duration to the next.
inline std::vector<double> rabi_populations(const std::vector<double>& durations,
                                            const EnsembleSample& ensemble, unsigned threads = 1) {
  for (std::size_t i = 0; i < durations.size(); ++i)
    if (durations[i] < 0.0 || (i > 0 && durations[i] < durations[i - 1]))
      throw std::invalid_argument("rabi durations must be sorted and non-negative");
  const std::size_t m = durations.size();
  std::vector<double> per_spin(ensemble.size() * m);
  parallel_for(ensemble.size(), threads, [&](std::size_t i) {
    const auto& s = ensemble.spins[i];
    BlochState v;
    double t = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
      const double dt = durations[k] - t;
      if (dt > 0.0) {
        v = evolve_driven_exact(v, {s.rabi * (1.0 + s.amp_error), 0.0, s.static_detuning, dt});
        t = durations[k];
      }
      per_spin[i * m + k] = population_ms0(v);
    }
  });
  std::vector<double> out(m, 0.0);
  for (std::size_t i = 0; i < ensemble.size(); ++i)
    for (std::size_t k = 0; k < m; ++k) out[k] += per_spin[i * m + k];
  for (auto& v : out) v /= static_cast<double>(ensemble.size());
  return out;
}

}  // namespace nvmag
