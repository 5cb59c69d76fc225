#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

#include "nvmag/errors.hpp"

namespace nvmag {

enum class KeyKind { number, count, seed, choice, text };

struct KeySpec {
  std::string name;
  std::string default_value;
  KeyKind kind = KeyKind::number;
  std::string help;
  std::vector<std::string> choices;  // for KeyKind::choice
  bool allow_auto = false;
  bool allow_inf = false;
};

/// Every recognised key. Unit suffixes are part of the names.
inline const std::vector<KeySpec>& config_schema() {
  using K = KeyKind;
  static const std::vector<KeySpec> s{
      {"experiment", "echo", K::choice, "experiment to run",
       {"odmr", "rabi", "fid", "echo", "xy16", "ac_sense", "resolution", "fieldmap"}},
      {"seed", "1", K::seed, "master RNG seed"},
      {"threads", "1", K::count, "worker threads (output does not depend on it)"},
      {"out_dir", "out", K::text, "output directory"},
      // spin physics
      {"n_spins", "10000", K::count, "Monte Carlo spins"},
      {"pi_time_s", "48e-9", K::number, "nominal pi-pulse duration"},
      {"t2star_s", "150e-9", K::number, "dephasing time of the static detuning spread", {}, false, true},
      {"t2_echo_s", "9e-6", K::number, "echo coherence time used to calibrate the bath"},
      {"tau_c_s", "10e-6", K::number, "bath correlation time"},
      {"bath_b_rad_s", "auto", K::number, "bath rms coupling; auto calibrates from t2_echo_s", {}, true},
      {"amp_error_mean", "0", K::number, "mean relative drive amplitude error"},
      {"amp_error_std", "0", K::number, "std of the relative drive amplitude error"},
      {"pulse_mode", "ideal", K::choice, "pulse model", {"ideal", "finite"}},
      // drive and geometry
      {"drive", "uniform", K::choice, "drive field source", {"uniform", "resonator"}},
      {"resonator_kind", "cwr", K::choice, "resonator geometry", {"cwr", "ring", "wire"}},
      {"resonator_f0_hz", "2.832e9", K::number, "resonance frequency"},
      {"resonator_q", "27", K::number, "loaded quality factor; auto picks the geometry default", {}, true},
      {"drive_freq_hz", "2.8088e9", K::number, "microwave drive frequency"},
      {"drive_power_w", "auto", K::number, "drive power; auto matches the mean Rabi frequency to pi_time_s", {}, true},
      {"standoff_m", "150e-6", K::number, "height of the sample face above the conductor"},
      {"strip_width_m", "1e-3", K::number, "CWR centre strip width"},
      {"ground_gap_m", "0.2e-3", K::number, "CWR slot width"},
      {"ground_width_m", "2e-3", K::number, "CWR ground strip width"},
      {"ring_radius_m", "1.5e-3", K::number, "ring radius"},
      {"wire_diameter_m", "auto", K::number, "conductor diameter; auto picks the geometry default", {}, true},
      {"nv_axis_x", "0", K::number, "NV quantization axis, x component"},
      {"nv_axis_y", "1", K::number, "NV quantization axis, y component"},
      {"nv_axis_z", "0", K::number, "NV quantization axis, z component"},
      {"beam_diameter_m", "30e-6", K::number, "laser beam diameter"},
      {"depth_m", "0.3e-3", K::number, "sample thickness along the beam"},
      {"centre_x_m", "0", K::number, "lateral beam position"},
      {"volume_m3", "1.4e-12", K::number, "reported detection volume"},
      {"nv_density_m3", "5e24", K::number, "NV density"},
      // readout
      {"contrast", "0.02", K::number, "fluorescence contrast"},
      {"v0_v", "1.454", K::number, "baseline window voltage"},
      {"shot_noise_v", "57.7e-6", K::number, "shot noise per S window"},
      {"laser_fluct_rel", "0", K::number, "relative per-shot laser fluctuation"},
      {"branch_drift_v", "0", K::number, "per-branch additive offset sd"},
      {"flicker_v", "0", K::number, "slow correlated offset sd"},
      {"s_window_s", "10e-6", K::number, "signal window width"},
      {"r_window_s", "50e-6", K::number, "reference window width"},
      {"laser_pulse_s", "400e-6", K::number, "readout laser pulse"},
      {"t_seq_s", "1.47e-3", K::number, "shot period"},
      {"processing", "two_branch", K::choice, "window processing", {"two_branch", "no_reference", "no_branch"}},
      // coherence sweeps
      {"coherence_repeats", "16", K::count, "XY16 repeats for the xy16 experiment"},
      {"sweep_points", "40", K::count, "points in a coherence sweep"},
      {"sweep_max_s", "auto", K::number, "largest total free time; auto = twice the analytic 1/e time", {}, true},
      // AC sensing
      {"sequence_family", "xy16", K::choice, "AC sensing sequence", {"echo", "cpmg", "xy4", "xy8", "xy16"}},
      {"sensing_repeats", "15", K::count, "repeats (or pulses for cpmg) in the AC sequence"},
      {"f_ac_hz", "362e3", K::number, "AC field frequency"},
      {"tau_s", "auto", K::number, "pulse spacing; auto = 1/(2 f_ac)", {}, true},
      {"ac_phase_rad", "0", K::number, "AC field phase at the first pi/2 pulse"},
      {"ac_max_t", "200e-9", K::number, "largest AC amplitude in the sweep"},
      {"ac_points", "41", K::count, "AC amplitudes in the sweep"},
      {"ac_shots", "1000", K::count, "shots per AC amplitude"},
      {"zero_field_shots", "10000", K::count, "shots for the single-shot spread at zero field"},
      // resolution
      {"resolution_shots", "10000000", K::count, "length of the shot series"},
      {"resolution_min_avg", "100", K::count, "smallest averaging count"},
      {"resolution_max_avg", "100000", K::count, "largest averaging count"},
      {"resolution_report_avg", "50000", K::count, "extra averaging count reported"},
      // rabi
      {"rabi_max_s", "500e-9", K::number, "longest Rabi pulse"},
      {"rabi_points", "101", K::count, "Rabi durations"},
      // odmr
      {"bias_t", "2e-3", K::number, "bias field along the aligned axis"},
      {"zfs_hz", "2.870e9", K::number, "zero-field splitting"},
      {"odmr_linewidth_hz", "8e6", K::number, "dip FWHM"},
      {"odmr_contrast_aligned", "0.03", K::number, "aligned-class dip depth"},
      {"odmr_contrast_other", "0.01", K::number, "misaligned-class dip depth"},
      {"odmr_start_hz", "2.75e9", K::number, "sweep start"},
      {"odmr_stop_hz", "2.99e9", K::number, "sweep end"},
      {"odmr_points", "961", K::count, "sweep points"},
      // field map
      {"map_half_span_m", "1e-3", K::number, "half width of the field profile"},
      {"map_points", "401", K::count, "profile points"},
      {"flatness_window_m", "30e-6", K::number, "window of the central flatness figure"},
  };
  return s;
}

inline const KeySpec* find_key(std::string_view name) {
  for (const auto& k : config_schema())
    if (k.name == name) return &k;
  return nullptr;
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline bool parse_double(std::string_view v, double& out) {
  if (v == "inf" || v == "+inf") { out = std::numeric_limits<double>::infinity(); return true; }
  if (!v.empty() && v.front() == '+') v.remove_prefix(1);
  const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  return r.ec == std::errc{} && r.ptr == v.data() + v.size();
}

}  // namespace detail

/// Resolved key=value configuration in schema order.
class RunConfig {
 public:
  RunConfig() {
    for (const auto& k : config_schema()) values_.emplace_back(k.name, k.default_value);
  }

  /// Parses `key = value` lines; '#' starts a comment. Unknown or duplicate
  /// keys and malformed values raise ConfigError naming the key.
  static RunConfig parse(std::string_view text) {
    RunConfig cfg;
    std::vector<std::string> seen;
    std::size_t lineno = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
      const auto nl = text.find('\n', pos);
      std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
      pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
      ++lineno;
      if (const auto h = line.find('#'); h != std::string_view::npos) line = line.substr(0, h);
      line = detail::trim(line);
      if (line.empty()) continue;
      const auto eq = line.find('=');
      if (eq == std::string_view::npos)
        throw ConfigError(std::string(line), "line " + std::to_string(lineno) + ": expected key = value");
      const std::string key(detail::trim(line.substr(0, eq)));
      if (std::find(seen.begin(), seen.end(), key) != seen.end())
        throw ConfigError(key, "line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
      seen.push_back(key);
      cfg.set(key, std::string(detail::trim(line.substr(eq + 1))));
    }
    return cfg;
  }

  static RunConfig load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("", "cannot read config file " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
  }

  void set(const std::string& key, const std::string& value) {
    const KeySpec* spec = find_key(key);
    if (!spec) throw ConfigError(key, "unknown key '" + key + "'");
    check_value(*spec, value);
    for (auto& kv : values_)
      if (kv.first == key) kv.second = value;
  }

  /// Applies a `key=value` override.
  void apply_override(std::string_view kv) {
    const auto eq = kv.find('=');
    if (eq == std::string_view::npos) throw ConfigError(std::string(kv), "override must be key=value");
    set(std::string(detail::trim(kv.substr(0, eq))), std::string(detail::trim(kv.substr(eq + 1))));
  }

  const std::string& raw(const std::string& key) const {
    for (const auto& kv : values_)
      if (kv.first == key) return kv.second;
    throw ConfigError(key, "unknown key '" + key + "'");
  }

  bool is_auto(const std::string& key) const { return raw(key) == "auto"; }

  double number(const std::string& key) const {
    double v = 0.0;
    if (!detail::parse_double(raw(key), v)) throw ConfigError(key, "key '" + key + "' has no numeric value");
    return v;
  }

  std::size_t count(const std::string& key) const { return static_cast<std::size_t>(number(key)); }

  std::uint64_t seed() const {
    std::uint64_t v = 0;
    const auto& s = raw("seed");
    std::from_chars(s.data(), s.data() + s.size(), v);
    return v;
  }

  const std::vector<std::pair<std::string, std::string>>& entries() const { return values_; }

  std::string to_text() const {
    std::string out;
    for (const auto& [k, v] : values_) out += k + "=" + v + "\n";
    return out;
  }

 private:
  static void check_value(const KeySpec& spec, const std::string& v) {
    auto bad = [&](const std::string& why) {
      return ConfigError(spec.name, "key '" + spec.name + "': " + why + " (got '" + v + "')");
    };
    if (v.empty()) throw bad("empty value");
    if (v == "auto") {
      if (!spec.allow_auto) throw bad("'auto' not allowed");
      return;
    }
    switch (spec.kind) {
      case KeyKind::number: {
        double d = 0.0;
        if (!detail::parse_double(v, d) || std::isnan(d)) throw bad("expected a number");
        if (std::isinf(d) && !spec.allow_inf) throw bad("infinite value not allowed");
        break;
      }
      case KeyKind::count: {
        double d = 0.0;
        if (!detail::parse_double(v, d) || !(d >= 0.0) || std::isinf(d) || d != std::floor(d) || d > 9.0e15)
          throw bad("expected a non-negative integer");
        break;
      }
      case KeyKind::seed: {
        std::uint64_t s = 0;
        const auto r = std::from_chars(v.data(), v.data() + v.size(), s);
        if (r.ec != std::errc{} || r.ptr != v.data() + v.size()) throw bad("expected an unsigned 64-bit integer");
        break;
      }
      case KeyKind::choice:
        if (std::find(spec.choices.begin(), spec.choices.end(), v) == spec.choices.end()) throw bad("not an allowed choice");
        break;
      case KeyKind::text:
        break;
    }
  }

  std::vector<std::pair<std::string, std::string>> values_;
};

}  // namespace nvmag
