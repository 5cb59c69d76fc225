#pragma once

#include <charconv>
#include <cmath>
#include <cstddef>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "nvmag/constants.hpp"

namespace nvmag {

struct Pulse {
  double phase = 0.0;  // rad
  double angle = kPi;  // rad, in (0, 2 pi]
};

struct Delay {
  double tau = 0.0;  // s
};

using SequenceElement = std::variant<Pulse, Delay>;

enum class SequenceFamily { ramsey, hahn_echo, cpmg, xy4, xy8, xy16 };

inline constexpr double kPhaseX = 0.0;
inline constexpr double kPhaseY = 0.5 * kPi;
inline constexpr double kPhaseXbar = kPi;
inline constexpr double kPhaseYbar = 1.5 * kPi;

/// A pi/2 - (delays and pi pulses) - pi/2 program.
///
/// All delays are center-to-center: tau/2 before the first pi pulse, tau between
/// pi pulses, tau/2 after the last. The first pulse is a pi/2 about x. The last
/// pulse is the readout pi/2 about `readout_phase`; readout_sign = +1 selects
/// the branch that maps the undisturbed prepared state back to ms = 0, -1 the
/// branch that sends it to ms = +-1. readout_phase = 0 measures the coherence
/// quadrature (signal W cos phi), pi/2 the phase quadrature (signal W sin phi).
class PulseSequence {
 public:
  PulseSequence() = default;
  PulseSequence(std::vector<SequenceElement> elements, std::string label, int readout_sign,
                double readout_phase)
      : elements_(std::move(elements)),
        label_(std::move(label)),
        readout_sign_(readout_sign),
        readout_phase_(readout_phase) {
    validate();
  }

  const std::vector<SequenceElement>& elements() const { return elements_; }
  const std::string& label() const { return label_; }
  int readout_sign() const { return readout_sign_; }
  double readout_phase() const { return readout_phase_; }

  std::size_t pi_pulse_count() const {
    std::size_t n = 0;
    for (const auto& e : elements_)
      if (const auto* p = std::get_if<Pulse>(&e); p && std::abs(p->angle - kPi) < 1e-12) ++n;
    return n;
  }

  double total_free_time() const {
    double t = 0.0;
    for (const auto& e : elements_)
      if (const auto* d = std::get_if<Delay>(&e)) t += d->tau;
    return t;
  }

  PulseSequence with_readout(int sign, double phase) const {
    if (sign != 1 && sign != -1) throw std::invalid_argument("readout sign must be +1 or -1");
    PulseSequence out = *this;
    out.readout_sign_ = sign;
    out.readout_phase_ = phase;
    out.elements_.back() = readout_pulse(sign, phase);
    return out;
  }

  PulseSequence with_readout_sign(int sign) const { return with_readout(sign, readout_phase_); }

  static Pulse readout_pulse(int sign, double phase) {
    return Pulse{wrap_phase(sign > 0 ? phase + kPi : phase), 0.5 * kPi};
  }

  static double wrap_phase(double phase) {
    double p = std::fmod(phase, kTwoPi);
    if (p < 0.0) p += kTwoPi;
    return p;
  }

 private:
  void validate() const {
    if (readout_sign_ != 1 && readout_sign_ != -1)
      throw std::invalid_argument("readout sign must be +1 or -1");
    std::vector<const Pulse*> pulses;
    for (const auto& e : elements_) {
      if (const auto* d = std::get_if<Delay>(&e)) {
        if (!(d->tau >= 0.0)) throw std::invalid_argument("sequence delay must be >= 0");
      } else {
        const auto& p = std::get<Pulse>(e);
        if (!(p.angle > 0.0 && p.angle <= kTwoPi + 1e-12))
          throw std::invalid_argument("pulse angle must lie in (0, 2pi]");
        pulses.push_back(&p);
      }
    }
    if (pulses.size() < 2) throw std::invalid_argument("sequence needs at least two pi/2 pulses");
    if (!std::holds_alternative<Pulse>(elements_.front()) ||
        !std::holds_alternative<Pulse>(elements_.back()))
      throw std::invalid_argument("sequence must start and end with a pulse");
    auto is = [](const Pulse* p, double a) { return std::abs(p->angle - a) < 1e-9; };
    if (!is(pulses.front(), 0.5 * kPi) || !is(pulses.back(), 0.5 * kPi))
      throw std::invalid_argument("first and last pulses must be pi/2");
    for (std::size_t i = 1; i + 1 < pulses.size(); ++i)
      if (!is(pulses[i], kPi)) throw std::invalid_argument("interior pulses must be pi");
  }

  std::vector<SequenceElement> elements_;
  std::string label_;
  int readout_sign_ = 1;
  double readout_phase_ = 0.0;
};

namespace detail {

inline PulseSequence assemble_pi_train(const std::vector<double>& phases, double tau,
                                       std::string label) {
  if (!(tau >= 0.0)) throw std::invalid_argument("pulse spacing must be >= 0");
  std::vector<SequenceElement> el;
  el.reserve(2 * phases.size() + 3);
  el.emplace_back(Pulse{kPhaseX, 0.5 * kPi});
  el.emplace_back(Delay{0.5 * tau});
  for (std::size_t i = 0; i < phases.size(); ++i) {
    if (i > 0) el.emplace_back(Delay{tau});
    el.emplace_back(Pulse{phases[i], kPi});
  }
  el.emplace_back(Delay{0.5 * tau});
  el.emplace_back(PulseSequence::readout_pulse(+1, 0.0));
  return PulseSequence(std::move(el), std::move(label), +1, 0.0);
}

}  // namespace detail

/// Gullion XY-16 block: XY-8 followed by its phase-inverted copy.
inline const std::vector<double>& xy16_phases() {
  static const std::vector<double> p{kPhaseX,    kPhaseY,    kPhaseX,    kPhaseY,
                                     kPhaseY,    kPhaseX,    kPhaseY,    kPhaseX,
                                     kPhaseXbar, kPhaseYbar, kPhaseXbar, kPhaseYbar,
                                     kPhaseYbar, kPhaseXbar, kPhaseYbar, kPhaseXbar};
  return p;
}

inline PulseSequence build_ramsey(double free_time) {
  if (!(free_time >= 0.0)) throw std::invalid_argument("ramsey: free time must be >= 0");
  std::vector<SequenceElement> el{Pulse{kPhaseX, 0.5 * kPi}, Delay{free_time},
                                  PulseSequence::readout_pulse(+1, 0.0)};
  return PulseSequence(std::move(el), "ramsey", +1, 0.0);
}

inline PulseSequence build_hahn_echo(double tau_total) {
  if (!(tau_total > 0.0)) throw std::invalid_argument("hahn echo: total time must be > 0");
  return detail::assemble_pi_train({kPhaseY}, tau_total, "hahn-echo");
}

inline PulseSequence build_cpmg(std::size_t n, double tau) {
  if (n == 0) throw std::invalid_argument("cpmg: n must be >= 1");
  return detail::assemble_pi_train(std::vector<double>(n, kPhaseY), tau,
                                   "cpmg-" + std::to_string(n));
}

namespace detail {

inline PulseSequence build_xy_prefix(std::size_t block, std::size_t n_repeats, double tau,
                                     const char* name) {
  if (n_repeats == 0) throw std::invalid_argument(std::string(name) + ": repeats must be >= 1");
  const auto& base = xy16_phases();
  std::vector<double> phases;
  phases.reserve(block * n_repeats);
  for (std::size_t r = 0; r < n_repeats; ++r)
    phases.insert(phases.end(), base.begin(), base.begin() + static_cast<long>(block));
  return assemble_pi_train(phases, tau, std::string(name) + "-" + std::to_string(n_repeats));
}

}  // namespace detail

inline PulseSequence build_xy4(std::size_t n_repeats, double tau) {
  return detail::build_xy_prefix(4, n_repeats, tau, "xy4");
}
inline PulseSequence build_xy8(std::size_t n_repeats, double tau) {
  return detail::build_xy_prefix(8, n_repeats, tau, "xy8");
}
inline PulseSequence build_xy16(std::size_t n_repeats, double tau) {
  return detail::build_xy_prefix(16, n_repeats, tau, "xy16");
}

inline std::string to_string(SequenceFamily f) {
  switch (f) {
    case SequenceFamily::ramsey: return "ramsey";
    case SequenceFamily::hahn_echo: return "echo";
    case SequenceFamily::cpmg: return "cpmg";
    case SequenceFamily::xy4: return "xy4";
    case SequenceFamily::xy8: return "xy8";
    case SequenceFamily::xy16: return "xy16";
  }
  return "unknown";
}

inline SequenceFamily parse_family(std::string_view name) {
  for (auto f : {SequenceFamily::ramsey, SequenceFamily::hahn_echo, SequenceFamily::cpmg, SequenceFamily::xy4,
                 SequenceFamily::xy8, SequenceFamily::xy16})
    if (name == to_string(f)) return f;
  throw std::invalid_argument("unknown sequence family '" + std::string(name) + "'");
}

/// Number of pi pulses per repeat for a family (1 for echo/cpmg units).
inline std::size_t pulses_per_unit(SequenceFamily f) {
  switch (f) {
    case SequenceFamily::ramsey: return 0;
    case SequenceFamily::hahn_echo:
    case SequenceFamily::cpmg: return 1;
    case SequenceFamily::xy4: return 4;
    case SequenceFamily::xy8: return 8;
    case SequenceFamily::xy16: return 16;
  }
  return 0;
}

/// Builds a family member with total free-evolution time `total_time`.
/// `count` is the pulse count for cpmg and the repeat count for xy families;
/// ignored for ramsey and hahn echo.
inline PulseSequence build_for_total_time(SequenceFamily f, std::size_t count,
                                          double total_time) {
  switch (f) {
    case SequenceFamily::ramsey: return build_ramsey(total_time);
    case SequenceFamily::hahn_echo: return build_hahn_echo(total_time);
    case SequenceFamily::cpmg: return build_cpmg(count, total_time / static_cast<double>(count));
    case SequenceFamily::xy4: return build_xy4(count, total_time / (4.0 * count));
    case SequenceFamily::xy8: return build_xy8(count, total_time / (8.0 * count));
    case SequenceFamily::xy16: return build_xy16(count, total_time / (16.0 * count));
  }
  throw std::invalid_argument("unknown sequence family");
}

inline std::size_t pi_count_for(SequenceFamily f, std::size_t count) {
  if (f == SequenceFamily::ramsey) return 0;
  if (f == SequenceFamily::hahn_echo) return 1;
  return pulses_per_unit(f) * count;
}

struct PulseTiming {
  std::vector<double> times;  // pi-pulse centers, measured from the first pi/2
  double total = 0.0;         // total free-evolution time
};

inline PulseTiming pulse_times(const PulseSequence& seq) {
  PulseTiming out;
  double t = 0.0;
  const auto& el = seq.elements();
  for (std::size_t i = 0; i < el.size(); ++i) {
    if (const auto* d = std::get_if<Delay>(&el[i])) {
      t += d->tau;
    } else if (i != 0 && i + 1 != el.size()) {
      out.times.push_back(t);
    }
  }
  out.total = t;
  return out;
}

// ---------------------------------------------------------------------------
// Text form: one element per line, `PULSE phase_deg angle_deg` or
// `DELAY seconds`. Lines starting with '#' are comments; a leading
// `# label <text>` and `# readout <sign> <phase_deg>` carry metadata.

namespace detail {

inline std::string format_number(double v) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

inline double to_degrees(double rad) {
  double d = rad * 180.0 / kPi;
  const double r = std::round(d);
  if (std::abs(d - r) < 1e-9) d = r;
  return d;
}

}  // namespace detail

inline std::string to_text(const PulseSequence& seq) {
  std::string out;
  out += "# label " + seq.label() + "\n";
  out += "# readout " + std::string(seq.readout_sign() > 0 ? "+1" : "-1") + " " +
         detail::format_number(detail::to_degrees(seq.readout_phase())) + "\n";
  for (const auto& e : seq.elements()) {
    if (const auto* p = std::get_if<Pulse>(&e)) {
      out += "PULSE " + detail::format_number(detail::to_degrees(p->phase)) + " " +
             detail::format_number(detail::to_degrees(p->angle)) + "\n";
    } else {
      out += "DELAY " + detail::format_number(std::get<Delay>(e).tau) + "\n";
    }
  }
  return out;
}

inline PulseSequence parse_text(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  std::vector<SequenceElement> el;
  std::string label = "custom";
  int sign = 1;
  double ro_phase = 0.0;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag)) continue;
    if (tag == "#") {
      std::string key;
      ls >> key;
      if (key == "label") {
        std::getline(ls >> std::ws, label);
      } else if (key == "readout") {
        double deg = 0.0;
        ls >> sign >> deg;
        ro_phase = deg * kPi / 180.0;
      }
      continue;
    }
    if (tag[0] == '#') continue;
    if (tag == "PULSE") {
      double ph = 0.0, ang = 0.0;
      if (!(ls >> ph >> ang))
        throw std::invalid_argument("sequence text line " + std::to_string(lineno) +
                                    ": malformed PULSE");
      el.emplace_back(Pulse{ph * kPi / 180.0, ang * kPi / 180.0});
    } else if (tag == "DELAY") {
      double tau = 0.0;
      if (!(ls >> tau))
        throw std::invalid_argument("sequence text line " + std::to_string(lineno) +
                                    ": malformed DELAY");
      el.emplace_back(Delay{tau});
    } else {
      throw std::invalid_argument("sequence text line " + std::to_string(lineno) +
                                  ": unknown tag '" + tag + "'");
    }
  }
  return PulseSequence(std::move(el), label, sign, ro_phase);
}

}  // namespace nvmag
