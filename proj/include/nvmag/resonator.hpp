#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "nvmag/constants.hpp"
#include "nvmag/parallel.hpp"

namespace nvmag {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
  double norm() const { return std::sqrt(dot(*this)); }
};

// Coordinates used throughout: conductors lie in the plane y = 0, straight
// conductors run along z, x is lateral, y is height above the conductor plane.
// The ring lies in y = 0 centred on the origin with its axis along y.

/// Field magnitude of an infinite straight wire, mu0 I / (2 pi d).
inline double field_of_wire(double current, double distance, double wire_radius = 0.0) {
  if (!(distance > wire_radius) || !(distance > 0.0))
    throw std::invalid_argument("field_of_wire: query point inside the conductor");
  return kMu0 * current / (kTwoPi * distance);
}

/// Field vector of an infinite straight wire along z through (cx, 0).
inline Vec2 field_of_wire_at(double current, Vec2 p, double wire_radius = 0.0, double cx = 0.0) {
  const double dx = p.x - cx, dy = p.y;
  const double r2 = dx * dx + dy * dy;
  const double mag = field_of_wire(current, std::sqrt(r2), wire_radius);
  const double r = std::sqrt(r2);
  return {-mag * dy / r, mag * dx / r};
}

/// Infinitely long, infinitesimally thin strip of the given width centred at
/// (cx, 0) carrying `current` along +z with uniform surface density.
inline Vec2 field_of_strip(double width, double current, Vec2 p, double cx = 0.0) {
  if (!(width > 0.0)) throw std::invalid_argument("field_of_strip: width must be > 0");
  const double u1 = p.x - cx - 0.5 * width;
  const double u2 = p.x - cx + 0.5 * width;
  if (p.y == 0.0 && u1 <= 0.0 && u2 >= 0.0)
    throw std::invalid_argument("field_of_strip: query point on the conductor");
  const double k = kMu0 * (current / width) / kTwoPi;
  const double bx = -k * (std::atan2(p.y, u1) - std::atan2(p.y, u2));
  const double by = 0.5 * k * std::log((u2 * u2 + p.y * p.y) / (u1 * u1 + p.y * p.y));
  return {bx, by};
}

/// Circular loop of radius R in the plane y = 0, current counter-clockwise
/// seen from +y. Complete elliptic integrals off axis, closed form on axis.
inline Vec3 field_of_ring(double radius, double current, Vec3 p, double wire_radius = 0.0) {
  if (!(radius > 0.0)) throw std::invalid_argument("field_of_ring: radius must be > 0");
  const double rho = std::hypot(p.x, p.z);
  const double ax = p.y;
  const double dist_to_wire = std::hypot(rho - radius, ax);
  if (dist_to_wire <= wire_radius || dist_to_wire == 0.0)
    throw std::invalid_argument("field_of_ring: query point on the conductor");
  const double R2 = radius * radius;
  if (rho < 1e-12 * radius) {
    const double s = R2 + ax * ax;
    return {0.0, kMu0 * current * R2 / (2.0 * s * std::sqrt(s)), 0.0};
  }
  const double r2 = R2 + rho * rho + ax * ax;
  const double alpha2 = r2 - 2.0 * radius * rho;
  const double beta2 = r2 + 2.0 * radius * rho;
  const double beta = std::sqrt(beta2);
  const double k = std::sqrt(1.0 - alpha2 / beta2);
  const double K = std::comp_ellint_1(k);
  const double E = std::comp_ellint_2(k);
  const double C = kMu0 * current / kPi;
  const double b_axial = C / (2.0 * alpha2 * beta) * ((R2 - rho * rho - ax * ax) * E + alpha2 * K);
  const double b_rho = C * ax / (2.0 * alpha2 * beta * rho) * ((R2 + rho * rho + ax * ax) * E - alpha2 * K);
  return {b_rho * p.x / rho, b_axial, b_rho * p.z / rho};
}

/// Lorentzian power response normalised to 1 at f0; FWHM = f0 / Q.
inline double resonance_enhancement(double f, double f0, double Q) {
  if (!(f > 0.0)) throw std::invalid_argument("resonance_enhancement: f must be > 0");
  const double d = Q * (f / f0 - f0 / f);
  return 1.0 / (1.0 + d * d);
}

enum class ResonatorKind { cwr, ring, wire };

inline const char* to_string(ResonatorKind k) {
  switch (k) {
    case ResonatorKind::cwr: return "cwr";
    case ResonatorKind::ring: return "ring";
    case ResonatorKind::wire: return "wire";
  }
  return "?";
}

struct ResonatorSpec {
  ResonatorKind kind = ResonatorKind::cwr;
  double strip_width = 1.0e-3;    // m, CWR centre electrode
  double ground_gap = 0.2e-3;     // m, CWR slot width
  double ground_width = 2.0e-3;   // m, CWR ground strips
  double ring_radius = 1.5e-3;    // m
  double wire_diameter = 20e-6;   // m, wire and ring conductor
  double standoff = 150e-6;       // m, height of the sample plane
  double f0 = 2.832e9;            // Hz
  double Q = 27.0;
  double drive_power = 1.0;       // W

  void check() const {
    if (!(strip_width > 0 && ground_gap > 0 && ground_width > 0 && ring_radius > 0 &&
          wire_diameter > 0 && standoff > 0))
      throw std::invalid_argument("resonator geometry lengths must be > 0");
    if (!(Q > 0.0) || !(f0 > 0.0)) throw std::invalid_argument("resonator needs Q > 0 and f0 > 0");
    if (!(drive_power >= 0.0)) throw std::invalid_argument("drive power must be >= 0");
  }

  bool resonant() const { return kind != ResonatorKind::wire; }

  /// Reference defaults for the three geometries compared in the profile
  /// study; ring and wire values are modelling choices, not published data.
  static ResonatorSpec defaults(ResonatorKind k) {
    ResonatorSpec s;
    s.kind = k;
    if (k == ResonatorKind::ring) {
      s.Q = 10.0;
      s.wire_diameter = 100e-6;
    } else if (k == ResonatorKind::wire) {
      s.Q = 1.0;
    }
    return s;
  }
};

/// Peak drive current I = sqrt(2 P Z0 g) / Z0 with g = Q L(f) for resonant
/// structures and g = 1 for the bare wire.
inline double drive_current(const ResonatorSpec& spec, double freq, double power) {
  const double gain = spec.resonant() ? spec.Q * resonance_enhancement(freq, spec.f0, spec.Q) : 1.0;
  return std::sqrt(2.0 * power * kLineImpedance * gain) / kLineImpedance;
}

/// Field of the structure carrying peak current `current`.
inline Vec3 structure_field(const ResonatorSpec& spec, double current, Vec3 p) {
  switch (spec.kind) {
    case ResonatorKind::cwr: {
      const Vec2 q{p.x, p.y};
      Vec2 b = field_of_strip(spec.strip_width, current, q);
      const double off = 0.5 * spec.strip_width + spec.ground_gap + 0.5 * spec.ground_width;
      for (double c : {-off, off}) {
        const Vec2 g = field_of_strip(spec.ground_width, -0.5 * current, q, c);
        b.x += g.x;
        b.y += g.y;
      }
      return {b.x, b.y, 0.0};
    }
    case ResonatorKind::wire: {
      const Vec2 b = field_of_wire_at(current, {p.x, p.y}, 0.5 * spec.wire_diameter);
      return {b.x, b.y, 0.0};
    }
    case ResonatorKind::ring:
      return field_of_ring(spec.ring_radius, current, p, 0.5 * spec.wire_diameter);
  }
  return {};
}

/// B1 per sqrt(W) of drive power at the resonator frequency f0.
inline Vec3 field_per_sqrt_watt(const ResonatorSpec& spec, Vec3 p) {
  return structure_field(spec, drive_current(spec, spec.f0, 1.0), p);
}

/// Rectilinear grid of B1 vectors (T per sqrt(W)). A single-point axis means
/// the field is translation invariant along it.
class FieldMap {
 public:
  FieldMap() = default;
  FieldMap(std::vector<double> xs, std::vector<double> ys, std::vector<double> zs,
           std::vector<Vec3> b)
      : xs_(std::move(xs)), ys_(std::move(ys)), zs_(std::move(zs)), b_(std::move(b)) {
    if (xs_.empty() || ys_.empty() || zs_.empty() || b_.size() != xs_.size() * ys_.size() * zs_.size())
      throw std::invalid_argument("FieldMap: grid and data sizes disagree");
    for (const auto* ax : {&xs_, &ys_, &zs_})
      for (std::size_t i = 1; i < ax->size(); ++i)
        if (!((*ax)[i] > (*ax)[i - 1])) throw std::invalid_argument("FieldMap: axes must increase");
  }

  /// Constant field everywhere.
  static FieldMap uniform(Vec3 b) { return FieldMap({0.0}, {0.0}, {0.0}, {b}); }

  const std::vector<double>& xs() const { return xs_; }
  const std::vector<double>& ys() const { return ys_; }
  const std::vector<double>& zs() const { return zs_; }
  const std::vector<Vec3>& values() const { return b_; }

  std::size_t index(std::size_t i, std::size_t j, std::size_t k) const {
    return (k * ys_.size() + j) * xs_.size() + i;
  }
  Vec3 at(std::size_t i, std::size_t j, std::size_t k) const { return b_[index(i, j, k)]; }
  Vec3 point(std::size_t i, std::size_t j, std::size_t k) const { return {xs_[i], ys_[j], zs_[k]}; }

  bool covers(double x0, double x1, double y0, double y1, double z0, double z1) const {
    auto in = [](const std::vector<double>& a, double lo, double hi) {
      return a.size() == 1 || (lo >= a.front() - 1e-15 && hi <= a.back() + 1e-15);
    };
    return in(xs_, x0, x1) && in(ys_, y0, y1) && in(zs_, z0, z1);
  }

  /// Trilinear interpolation; throws outside the grid.
  Vec3 interpolate(Vec3 p) const {
    std::size_t i0, j0, k0;
    double fx, fy, fz;
    locate(xs_, p.x, i0, fx);
    locate(ys_, p.y, j0, fy);
    locate(zs_, p.z, k0, fz);
    const std::size_t i1 = xs_.size() > 1 ? i0 + 1 : i0;
    const std::size_t j1 = ys_.size() > 1 ? j0 + 1 : j0;
    const std::size_t k1 = zs_.size() > 1 ? k0 + 1 : k0;
    auto lerp = [](Vec3 a, Vec3 b, double t) { return a * (1.0 - t) + b * t; };
    const Vec3 c00 = lerp(at(i0, j0, k0), at(i1, j0, k0), fx);
    const Vec3 c10 = lerp(at(i0, j1, k0), at(i1, j1, k0), fx);
    const Vec3 c01 = lerp(at(i0, j0, k1), at(i1, j0, k1), fx);
    const Vec3 c11 = lerp(at(i0, j1, k1), at(i1, j1, k1), fx);
    return lerp(lerp(c00, c10, fy), lerp(c01, c11, fy), fz);
  }

 private:
  static void locate(const std::vector<double>& a, double v, std::size_t& i, double& f) {
    if (a.size() == 1) {
      i = 0;
      f = 0.0;
      return;
    }
    if (v < a.front() - 1e-15 || v > a.back() + 1e-15)
      throw std::out_of_range("FieldMap: point outside the mapped region");
    auto it = std::upper_bound(a.begin(), a.end(), v);
    std::size_t hi = static_cast<std::size_t>(it - a.begin());
    hi = std::clamp<std::size_t>(hi, 1, a.size() - 1);
    i = hi - 1;
    f = std::clamp((v - a[i]) / (a[hi] - a[i]), 0.0, 1.0);
  }

  std::vector<double> xs_, ys_, zs_;
  std::vector<Vec3> b_;
};

inline std::vector<double> linspace(double a, double b, std::size_t n) {
  std::vector<double> v(n);
  if (n == 1) {
    v[0] = a;
    return v;
  }
  for (std::size_t i = 0; i < n; ++i)
    v[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
  return v;
}

/// Samples field_per_sqrt_watt over the grid. Output does not depend on `threads`.
inline FieldMap build_field_map(const ResonatorSpec& spec, std::vector<double> xs,
                                std::vector<double> ys, std::vector<double> zs,
                                unsigned threads = 1) {
  spec.check();
  std::vector<Vec3> b(xs.size() * ys.size() * zs.size());
  const std::size_t nx = xs.size(), ny = ys.size();
  parallel_for(b.size(), threads, [&](std::size_t idx) {
    const std::size_t i = idx % nx, j = (idx / nx) % ny, k = idx / (nx * ny);
    b[idx] = field_per_sqrt_watt(spec, {xs[i], ys[j], zs[k]});
  });
  return FieldMap(std::move(xs), std::move(ys), std::move(zs), std::move(b));
}

/// Local Rabi angular frequency Omega = gamma |B1_perp| / 2 (linear drive,
/// rotating-wave halving) for the given drive power.
inline double rabi_from_field(Vec3 b1, Vec3 nv_axis, double gamma_e = kGammaE, double power = 1.0) {
  const double n = nv_axis.norm();
  const Vec3 u = nv_axis * (1.0 / n);
  const Vec3 perp = b1 - u * b1.dot(u);
  return gamma_e * perp.norm() * std::sqrt(power) / 2.0;
}

inline std::vector<double> rabi_map(const FieldMap& map, Vec3 nv_axis, double gamma_e = kGammaE,
                                    double power = 1.0) {
  if (!(nv_axis.norm() > 0.0)) throw std::invalid_argument("rabi_map: NV axis must be non-zero");
  std::vector<double> out;
  out.reserve(map.values().size());
  for (const auto& b : map.values()) out.push_back(rabi_from_field(b, nv_axis, gamma_e, power));
  return out;
}

struct ProfileStats {
  double peak = 0.0;            // max |B1| along the line
  double peak_position = 0.0;   // x of the peak
  double central_variation = 0.0;  // (max - min)/max of |B1| within the central window
};

/// |B1| along x at height `standoff` (and z = 0), the line through the
/// strongest point for the straight geometries and a ring diameter for the
/// ring. Variation is evaluated over |x - centre| <= window/2.
inline ProfileStats profile_stats(const ResonatorSpec& spec, double half_span, double window,
                                  std::size_t points = 4001, double centre = 0.0) {
  ProfileStats st;
  double cmin = std::numeric_limits<double>::infinity(), cmax = 0.0;
  const auto xs = linspace(-half_span, half_span, points);
  for (double x : xs) {
    const double m = field_per_sqrt_watt(spec, {x, spec.standoff, 0.0}).norm() * std::sqrt(spec.drive_power);
    if (m > st.peak) {
      st.peak = m;
      st.peak_position = x;
    }
  }
  for (double x : linspace(centre - 0.5 * window, centre + 0.5 * window, 301)) {
    const double m = field_per_sqrt_watt(spec, {x, spec.standoff, 0.0}).norm();
    cmin = std::min(cmin, m);
    cmax = std::max(cmax, m);
  }
  st.central_variation = cmax > 0.0 ? (cmax - cmin) / cmax : 0.0;
  return st;
}

}  // namespace nvmag
