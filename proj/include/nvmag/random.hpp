#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

namespace nvmag {

// SplitMix64. Small, stateless-to-seed, and good enough for Monte Carlo
// substreams; every spin gets its own engine derived from (seed, index, salt).
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit SplitMix64(std::uint64_t seed = 0) : state_(seed) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t state_;
};

inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Counter-based substream key: depends only on its arguments, never on the
/// order in which substreams are created.
inline std::uint64_t substream_seed(std::uint64_t master, std::uint64_t index,
                                    std::uint64_t salt = 0) {
  std::uint64_t h = mix64(master + 0x9E3779B97F4A7C15ULL);
  h = mix64(h ^ (index * 0xD1B54A32D192ED03ULL + 1));
  h = mix64(h ^ (salt * 0x8CB92BA72F3D8DD7ULL + 7));
  return h;
}

/// Standard normal sampler (Marsaglia polar method). Written out rather than
/// using std::normal_distribution so streams are identical across standard
/// library implementations.
class NormalSampler {
 public:
  template <class Engine>
  double operator()(Engine& eng) {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    constexpr double scale = 1.0 / 9007199254740992.0;  // 2^-53
    double u, v, s;
    do {
      u = 2.0 * static_cast<double>(eng() >> 11) * scale - 1.0;
      v = 2.0 * static_cast<double>(eng() >> 11) * scale - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double m = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * m;
    has_spare_ = true;
    return u * m;
  }

 private:
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Engine plus normal sampler bundled as one per-spin stream.
struct RngStream {
  explicit RngStream(std::uint64_t seed) : engine(seed) {}

  double normal() { return gauss(engine); }
  double normal(double mean, double sd) { return mean + sd * gauss(engine); }
  double uniform() {
    return static_cast<double>(engine() >> 11) * (1.0 / 9007199254740992.0);
  }

  SplitMix64 engine;
  NormalSampler gauss;
};

}  // namespace nvmag
