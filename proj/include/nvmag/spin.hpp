#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

namespace nvmag {

/// Rotating-frame Bloch vector of one effective two-level NV spin.
/// z = +1 is ms = 0 (bright), z = -1 is the addressed ms = +-1 level.
struct BlochState {
  double x = 0.0;
  double y = 0.0;
  double z = 1.0;

  double norm2() const { return x * x + y * y + z * z; }
};

struct DriveParams {
  double rabi_angular_freq = 0.0;  // rad/s
  double phase = 0.0;              // rad, rotation-axis azimuth
  double detuning = 0.0;           // rad/s
  double duration = 0.0;           // s
};

/// Right-handed rotation matrix about an equatorial axis (cos phase, sin phase, 0).
/// Precomputing it lets hot loops skip the trig in rotate_ideal.
class Rotation {
 public:
  Rotation() = default;

  static Rotation equatorial(double phase, double angle) {
    const double nx = std::cos(phase);
    const double ny = std::sin(phase);
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    const double t = 1.0 - c;
    Rotation r;
    // Rodrigues: v' = v c + (n x v) s + n (n.v) t with n = (nx, ny, 0).
    r.m_ = {{{c + nx * nx * t, nx * ny * t, ny * s},
             {nx * ny * t, c + ny * ny * t, -nx * s},
             {-ny * s, nx * s, c}}};
    return r;
  }

  /// Rotation by `angle` about the (not necessarily unit) axis (ax, ay, az).
  static Rotation about(double ax, double ay, double az, double angle) {
    const double n = std::sqrt(ax * ax + ay * ay + az * az);
    if (!(n > 0.0)) return Rotation{};
    const double x = ax / n, y = ay / n, z = az / n;
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    const double t = 1.0 - c;
    Rotation r;
    r.m_ = {{{c + x * x * t, x * y * t - z * s, x * z * t + y * s},
             {x * y * t + z * s, c + y * y * t, y * z * t - x * s},
             {x * z * t - y * s, y * z * t + x * s, c + z * z * t}}};
    return r;
  }

  BlochState apply(const BlochState& v) const {
    return {m_[0][0] * v.x + m_[0][1] * v.y + m_[0][2] * v.z,
            m_[1][0] * v.x + m_[1][1] * v.y + m_[1][2] * v.z,
            m_[2][0] * v.x + m_[2][1] * v.y + m_[2][2] * v.z};
  }

 private:
  std::array<std::array<double, 3>, 3> m_{{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};
};

/// Instantaneous pulse: rotate by `angle` about (cos phase, sin phase, 0).
/// Right-handed, so a pi/2 pulse about x takes +z to -y.
inline BlochState rotate_ideal(const BlochState& state, double phase, double angle) {
  return Rotation::equatorial(phase, angle).apply(state);
}

/// Rotation about +z by `angle` (free precession phase).
inline BlochState precess(const BlochState& s, double angle) {
  const double c = std::cos(angle);
  const double sn = std::sin(angle);
  return {c * s.x - sn * s.y, sn * s.x + c * s.y, s.z};
}

inline BlochState evolve_free(const BlochState& state, double tau, double detuning) {
  if (tau < 0.0) throw std::invalid_argument("evolve_free: negative tau");
  return precess(state, detuning * tau);
}

namespace detail {

inline BlochState bloch_rhs(const BlochState& v, double wx, double wy, double wz) {
  // dv/dt = w x v
  return {wy * v.z - wz * v.y, wz * v.x - wx * v.z, wx * v.y - wy * v.x};
}

inline BlochState axpy(const BlochState& v, double a, const BlochState& k) {
  return {v.x + a * k.x, v.y + a * k.y, v.z + a * k.z};
}

}  // namespace detail

/// Fixed-step RK4 integration of dv/dt = (Omega cos phi, Omega sin phi, Delta) x v.
/// The step actually used is duration / ceil(duration / dt), never above dt.
/// Throws std::invalid_argument when dt > duration / 50.
inline BlochState evolve_driven(const BlochState& state, const DriveParams& drive, double dt) {
  if (drive.rabi_angular_freq < 0.0 || drive.duration < 0.0)
    throw std::invalid_argument("evolve_driven: negative Rabi frequency or duration");
  if (drive.duration == 0.0) return state;
  if (!(dt > 0.0) || dt > drive.duration / 50.0)
    throw std::invalid_argument("evolve_driven: dt exceeds duration/50, insufficient resolution");

  const auto steps = static_cast<long>(std::ceil(drive.duration / dt - 1e-9));
  const double h = drive.duration / static_cast<double>(steps);
  const double wx = drive.rabi_angular_freq * std::cos(drive.phase);
  const double wy = drive.rabi_angular_freq * std::sin(drive.phase);
  const double wz = drive.detuning;

  using detail::axpy;
  using detail::bloch_rhs;
  BlochState v = state;
  for (long i = 0; i < steps; ++i) {
    const BlochState k1 = bloch_rhs(v, wx, wy, wz);
    const BlochState k2 = bloch_rhs(axpy(v, 0.5 * h, k1), wx, wy, wz);
    const BlochState k3 = bloch_rhs(axpy(v, 0.5 * h, k2), wx, wy, wz);
    const BlochState k4 = bloch_rhs(axpy(v, h, k3), wx, wy, wz);
    v.x += h / 6.0 * (k1.x + 2.0 * k2.x + 2.0 * k3.x + k4.x);
    v.y += h / 6.0 * (k1.y + 2.0 * k2.y + 2.0 * k3.y + k4.y);
    v.z += h / 6.0 * (k1.z + 2.0 * k2.z + 2.0 * k3.z + k4.z);
  }
  return v;
}

/// Closed-form propagator for constant drive parameters: a rotation about
/// (Omega cos phi, Omega sin phi, Delta) by |w| * duration. Same ODE as
/// evolve_driven, without discretisation error.
inline BlochState evolve_driven_exact(const BlochState& state, const DriveParams& drive) {
  if (drive.rabi_angular_freq < 0.0 || drive.duration < 0.0)
    throw std::invalid_argument("evolve_driven_exact: negative Rabi frequency or duration");
  const double wx = drive.rabi_angular_freq * std::cos(drive.phase);
  const double wy = drive.rabi_angular_freq * std::sin(drive.phase);
  const double rate = std::sqrt(wx * wx + wy * wy + drive.detuning * drive.detuning);
  return Rotation::about(wx, wy, drive.detuning, rate * drive.duration).apply(state);
}

/// Step size keeping the per-step rotation angle below 0.025 rad and at least
/// 128 steps per pulse; RK4 norm drift then stays well under 1e-8 per pulse.
inline double default_rk4_step(const DriveParams& drive) {
  if (drive.duration <= 0.0) return 0.0;
  const double rate = std::hypot(drive.rabi_angular_freq, drive.detuning);
  const double by_angle = rate > 0.0 ? 0.025 / rate : drive.duration;
  return std::min(drive.duration / 128.0, by_angle);
}

inline double population_ms0(const BlochState& state) {
  const double p = 0.5 * (1.0 + state.z);
  return p < 0.0 ? 0.0 : (p > 1.0 ? 1.0 : p);
}

}  // namespace nvmag
