#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "nvmag/config.hpp"
#include "nvmag/csv.hpp"
#include "nvmag/ensemble.hpp"
#include "nvmag/errors.hpp"
#include "nvmag/experiments.hpp"
#include "nvmag/readout.hpp"
#include "nvmag/resonator.hpp"

namespace nvmag::cli {

inline constexpr const char* kVersion = "0.1.0";

enum ExitCode : int { ok = 0, failure = 1, config_error = 2, numerical_error = 3 };

// ---------------------------------------------------------------------------
// Building simulation objects from a configuration

inline ResonatorKind resonator_kind(const RunConfig& c) {
  const auto& k = c.raw("resonator_kind");
  return k == "ring" ? ResonatorKind::ring : (k == "wire" ? ResonatorKind::wire : ResonatorKind::cwr);
}

inline ResonatorSpec resonator_spec(const RunConfig& c) {
  ResonatorSpec s = ResonatorSpec::defaults(resonator_kind(c));
  s.strip_width = c.number("strip_width_m");
  s.ground_gap = c.number("ground_gap_m");
  s.ground_width = c.number("ground_width_m");
  s.ring_radius = c.number("ring_radius_m");
  if (!c.is_auto("wire_diameter_m")) s.wire_diameter = c.number("wire_diameter_m");
  s.standoff = c.number("standoff_m");
  s.f0 = c.number("resonator_f0_hz");
  if (!c.is_auto("resonator_q")) s.Q = c.number("resonator_q");
  s.drive_power = c.is_auto("drive_power_w") ? 1.0 : c.number("drive_power_w");
  return s;
}

inline DetectionVolume detection_volume(const RunConfig& c) {
  DetectionVolume v;
  v.beam_diameter = c.number("beam_diameter_m");
  v.depth = c.number("depth_m");
  v.centre_x = c.number("centre_x_m");
  v.bottom = c.number("standoff_m");
  v.quoted_volume = c.number("volume_m3");
  return v;
}

inline double nominal_rabi(const RunConfig& c) { return kPi / c.number("pi_time_s"); }

inline NoiseModel noise_model(const RunConfig& c, const OUBath& bath) {
  NoiseModel n;
  n.quasi_static.sigma_delta = sigma_from_t2star(c.number("t2star_s"));
  n.bath = bath;
  n.amplitude = {c.number("amp_error_mean"), c.number("amp_error_std")};
  return n;
}

inline OUBath bath_for(const RunConfig& c) {
  if (!c.is_auto("bath_b_rad_s")) return {c.number("bath_b_rad_s"), c.number("tau_c_s")};
  return calibrate_bath(c.number("t2_echo_s"), c.number("tau_c_s"));
}

inline ReadoutModel readout_model(const RunConfig& c) {
  ReadoutModel m;
  m.v0 = c.number("v0_v");
  m.contrast = c.number("contrast");
  m.s_window = c.number("s_window_s");
  m.r_window = c.number("r_window_s");
  m.laser_pulse = c.number("laser_pulse_s");
  m.shot_noise_v = c.number("shot_noise_v");
  m.laser_fluct_rel = c.number("laser_fluct_rel");
  m.branch_drift_v = c.number("branch_drift_v");
  m.flicker_v = c.number("flicker_v");
  return m;
}

inline Processing processing(const RunConfig& c) {
  const auto& p = c.raw("processing");
  return p == "no_reference" ? Processing::no_reference
                             : (p == "no_branch" ? Processing::no_branch : Processing::two_branch);
}

inline SimulationOptions simulation_options(const RunConfig& c) {
  SimulationOptions o;
  o.pulse_mode = c.raw("pulse_mode") == "finite" ? PulseMode::finite : PulseMode::ideal;
  o.nominal_rabi = nominal_rabi(c);
  o.threads = static_cast<unsigned>(std::max<std::size_t>(1, c.count("threads")));
  return o;
}

struct EnsembleBuild {
  EnsembleSample ensemble;
  double drive_power = 0.0;  // W; 0 for a uniform drive
};

/// Samples the ensemble. With a resonator drive and drive_power_w = auto the
/// power is chosen so that the ensemble-mean Rabi frequency equals pi / pi_time_s.
inline EnsembleBuild build_ensemble(const RunConfig& c, const NoiseModel& noise) {
  const auto n = c.count("n_spins");
  const auto threads = static_cast<unsigned>(std::max<std::size_t>(1, c.count("threads")));
  const auto vol = detection_volume(c);
  EnsembleBuild out;
  if (c.raw("drive") == "uniform") {
    out.ensemble = sample_ensemble(vol, DriveField::uniform(nominal_rabi(c)), noise, n, c.seed(), threads);
    return out;
  }
  const auto spec = resonator_spec(c);
  const double r = 0.5 * vol.beam_diameter;
  const auto xs = linspace(vol.centre_x - r, vol.centre_x + r, 9);
  const auto ys = linspace(vol.bottom, vol.bottom + vol.depth, 61);
  const auto zs = spec.kind == ResonatorKind::ring ? linspace(-r, r, 9) : std::vector<double>{0.0};
  DriveField field;
  field.map = build_field_map(spec, xs, ys, zs, threads);
  field.nv_axis = {c.number("nv_axis_x"), c.number("nv_axis_y"), c.number("nv_axis_z")};
  const double detune_gain =
      spec.resonant() ? resonance_enhancement(c.number("drive_freq_hz"), spec.f0, spec.Q) : 1.0;
  if (c.is_auto("drive_power_w")) {
    field.power = 1.0;
    const auto probe = sample_ensemble(vol, field, noise, n, c.seed(), threads);
    double mean = 0.0;
    for (const auto& s : probe.spins) mean += s.rabi;
    mean /= static_cast<double>(probe.size());
    field.power = std::pow(nominal_rabi(c) / mean, 2);
    out.drive_power = field.power / detune_gain;
  } else {
    out.drive_power = c.number("drive_power_w");
    field.power = out.drive_power * detune_gain;
  }
  out.ensemble = sample_ensemble(vol, field, noise, n, c.seed(), threads);
  return out;
}

// ---------------------------------------------------------------------------
// Validation

struct ValidationReport {
  std::vector<std::string> warnings;
};

/// Range and consistency checks beyond the schema. Throws ConfigError on
/// invalid values; soft inconsistencies become warnings.
inline ValidationReport check_config(const RunConfig& c) {
  ValidationReport rep;
  auto positive = [&](const char* key) {
    if (!(c.number(key) > 0.0)) throw ConfigError(key, std::string("key '") + key + "' must be positive");
  };
  auto at_least = [&](const char* key, std::size_t lo) {
    if (c.count(key) < lo)
      throw ConfigError(key, std::string("key '") + key + "' must be >= " + std::to_string(lo));
  };
  for (const char* k : {"pi_time_s", "t2star_s", "t2_echo_s", "tau_c_s", "resonator_f0_hz", "drive_freq_hz",
                        "standoff_m", "strip_width_m", "ground_gap_m", "ground_width_m", "ring_radius_m",
                        "beam_diameter_m", "depth_m", "volume_m3", "nv_density_m3", "v0_v", "s_window_s",
                        "r_window_s", "laser_pulse_s", "t_seq_s", "f_ac_hz", "ac_max_t", "rabi_max_s",
                        "odmr_linewidth_hz", "map_half_span_m", "flatness_window_m", "zfs_hz"})
    positive(k);
  if (!c.is_auto("bath_b_rad_s") && c.number("bath_b_rad_s") < 0.0)
    throw ConfigError("bath_b_rad_s", "key 'bath_b_rad_s' must be >= 0");
  for (const char* k : {"resonator_q", "drive_power_w", "wire_diameter_m", "tau_s", "sweep_max_s"})
    if (!c.is_auto(k)) positive(k);
  for (const char* k : {"shot_noise_v", "laser_fluct_rel", "branch_drift_v", "flicker_v", "amp_error_std",
                        "odmr_contrast_aligned", "odmr_contrast_other", "bias_t"})
    if (c.number(k) < 0.0) throw ConfigError(k, std::string("key '") + k + "' must be >= 0");
  if (!(c.number("contrast") > 0.0 && c.number("contrast") < 1.0))
    throw ConfigError("contrast", "key 'contrast' must lie in (0, 1)");
  if (c.number("s_window_s") + c.number("r_window_s") > c.number("laser_pulse_s"))
    throw ConfigError("laser_pulse_s", "S and R windows do not fit inside laser_pulse_s");
  if (!(c.number("odmr_stop_hz") > c.number("odmr_start_hz")))
    throw ConfigError("odmr_stop_hz", "odmr_stop_hz must exceed odmr_start_hz");
  if (c.number("amp_error_mean") <= -1.0) throw ConfigError("amp_error_mean", "amp_error_mean must exceed -1");
  if (std::hypot(c.number("nv_axis_x"), c.number("nv_axis_y"), c.number("nv_axis_z")) == 0.0)
    throw ConfigError("nv_axis_y", "NV axis must be non-zero");
  if (c.is_auto("bath_b_rad_s") && c.number("tau_c_s") > kMaxCorrelationToT2 * c.number("t2_echo_s"))
    throw ConfigError("tau_c_s", "tau_c_s is too long for echo calibration of the bath");
  at_least("n_spins", 1);
  at_least("threads", 1);
  at_least("sweep_points", 4);
  at_least("coherence_repeats", 1);
  at_least("sensing_repeats", 1);
  at_least("ac_points", 5);
  at_least("ac_shots", 1);
  at_least("zero_field_shots", 2);
  at_least("rabi_points", 8);
  at_least("odmr_points", 8);
  at_least("map_points", 2);
  at_least("resolution_min_avg", 1);
  if (c.count("resolution_max_avg") < c.count("resolution_min_avg"))
    throw ConfigError("resolution_max_avg", "resolution_max_avg must be >= resolution_min_avg");
  const auto longest = std::max(c.count("resolution_max_avg"), c.count("resolution_report_avg"));
  if (c.count("resolution_shots") < 2 * longest)
    throw ConfigError("resolution_shots", "resolution_shots must hold at least two blocks of the longest average");

  // AC sensing: spacing versus the field period, and room for finite pulses.
  const double f_ac = c.number("f_ac_hz");
  const double matched = 0.5 / f_ac;
  const double tau = c.is_auto("tau_s") ? matched : c.number("tau_s");
  if (std::abs(tau / matched - 1.0) > 0.01)
    rep.warnings.push_back("tau_s=" + format_double(tau) + " s differs from 1/(2 f_ac_hz)=" +
                           format_double(matched) + " s by more than 1%");
  if (c.raw("pulse_mode") == "finite" && c.number("pi_time_s") >= tau &&
      (c.raw("experiment") == "ac_sense" || c.raw("experiment") == "resolution"))
    throw ConfigError("tau_s", "finite pi pulses of pi_time_s do not fit in the pulse spacing");
  if (c.raw("pulse_mode") == "finite" && c.raw("experiment") == "xy16" && !c.is_auto("sweep_max_s")) {
    const double spacing = c.number("sweep_max_s") / c.number("sweep_points") /
                           (16.0 * static_cast<double>(c.count("coherence_repeats")));
    if (spacing < c.number("pi_time_s"))
      rep.warnings.push_back("shortest sweep points have pulse spacing below pi_time_s and will be rejected");
  }
  if (c.raw("drive") == "resonator" && resonator_kind(c) == ResonatorKind::ring)
    rep.warnings.push_back("ring field near its axis is parallel to nv_axis_y; set the NV axis accordingly");
  return rep;
}

/// `validate`: schema and physics checks without running. Prints "ok" and
/// every resolved key on success.
inline int validate(const RunConfig& c, std::ostream& out, std::ostream& err) {
  try {
    const auto rep = check_config(c);
    for (const auto& w : rep.warnings) err << "warning: " << w << "\n";
    out << "ok\n";
    for (const auto& [k, v] : c.entries()) out << k << "=" << v << "\n";
    return ExitCode::ok;
  } catch (const ConfigError& e) {
    err << "config error [" << e.key() << "]: " << e.what() << "\n";
    return ExitCode::config_error;
  }
}

// ---------------------------------------------------------------------------
// Running

namespace detail {

inline void write_fit(const std::string& path, const CurveFitResult& f,
                      const std::vector<std::pair<std::string, double>>& extra = {}) {
  CsvWriter w(path, {"parameter", "value", "std_error"});
  for (std::size_t i = 0; i < f.names.size(); ++i)
    w.row_cells({f.names[i], format_double(f.params[i]), format_double(f.std_errors[i])});
  w.row_cells({"residual_rms", format_double(f.residual_rms), "0"});
  w.row_cells({"converged", f.converged ? "1" : "0", "0"});
  for (const auto& [k, v] : extra) w.row_cells({k, format_double(v), "0"});
}

inline void write_report(const std::string& path, const SensitivityReport& r) {
  CsvWriter w(path, {"delta_s_V", "max_slope_V_per_T", "t_seq_s", "eta_T_per_sqrtHz"});
  w.row({r.delta_s, r.max_slope, r.t_seq, r.eta});
}

struct RunState {
  const RunConfig& cfg;
  std::filesystem::path dir;
  std::vector<std::pair<std::string, std::string>> derived;  // extra manifest lines
  bool fit_failed = false;
  std::string failure;

  std::string path(const char* name) const { return (dir / name).string(); }
  void note(const std::string& k, double v) { derived.emplace_back(k, format_double(v)); }
  void check_fit(const CurveFitResult& f, const char* what) {
    if (!f.converged) {
      fit_failed = true;
      failure = std::string(what) + " fit did not converge";
    }
  }
};

inline void run_odmr_experiment(RunState& st) {
  const auto& c = st.cfg;
  OdmrModel m;
  m.bias_field = c.number("bias_t");
  m.zfs = c.number("zfs_hz");
  m.linewidth = c.number("odmr_linewidth_hz");
  m.contrast = {c.number("odmr_contrast_aligned"), c.number("odmr_contrast_other")};
  const auto freqs = linspace(c.number("odmr_start_hz"), c.number("odmr_stop_hz"), c.count("odmr_points"));
  const auto r = run_odmr(freqs, m);
  CsvWriter w(st.path("curve.csv"), {"frequency_hz", "signal"});
  for (std::size_t i = 0; i < freqs.size(); ++i) w.row({freqs[i], r.signal[i]});
  write_fit(st.path("fit.csv"), r.fit, {{"expected_dip_hz", r.expected_dip}});
  st.check_fit(r.fit, "lorentzian");
}

inline void run_rabi_experiment(RunState& st, const EnsembleSample& ens) {
  const auto& c = st.cfg;
  const auto d = linspace(0.0, c.number("rabi_max_s"), c.count("rabi_points"));
  const auto r = run_rabi(d, ens, simulation_options(c).threads);
  CsvWriter w(st.path("curve.csv"), {"duration_s", "population_ms0"});
  for (std::size_t i = 0; i < d.size(); ++i) w.row({d[i], r.population[i]});
  write_fit(st.path("fit.csv"), r.fit);
  st.check_fit(r.fit, "damped sine");
}

inline void run_coherence_experiment(RunState& st, const EnsembleSample& ens, const OUBath& bath,
                                     const NoiseModel& noise) {
  const auto& c = st.cfg;
  const auto& kind = c.raw("experiment");
  SequenceFamily fam = SequenceFamily::hahn_echo;
  std::size_t count = 1;
  if (kind == "fid") fam = SequenceFamily::ramsey;
  if (kind == "xy16") {
    fam = SequenceFamily::xy16;
    count = c.count("coherence_repeats");
  }
  CoherenceOptions copt;
  copt.static_variance = noise.quasi_static.sigma_delta * noise.quasi_static.sigma_delta;
  double t_analytic = std::numeric_limits<double>::quiet_NaN();
  if (bath.b > 0.0 || (fam == SequenceFamily::ramsey && copt.static_variance > 0.0)) {
    const double guess = fam == SequenceFamily::ramsey ? c.number("t2star_s") : c.number("t2_echo_s");
    if (bath.b > 0.0)
      t_analytic = coherence_time(fam, count, OuSpectrum(bath), std::isfinite(guess) ? guess : 1e-6, copt);
    else
      t_analytic = coherence_time(fam, count, [](double) { return 0.0; }, guess, copt);
  }
  double t_max = 0.0;
  if (c.is_auto("sweep_max_s")) {
    if (!std::isfinite(t_analytic))
      throw ConfigError("sweep_max_s", "no decay in this configuration; set sweep_max_s explicitly");
    t_max = 2.0 * t_analytic;
  } else {
    t_max = c.number("sweep_max_s");
  }
  st.note("sweep_max_s_resolved", t_max);
  const auto r = run_coherence(fam, count, coherence_sweep(t_max, c.count("sweep_points")), ens, bath,
                               noise.quasi_static.sigma_delta, simulation_options(c));
  CsvWriter w(st.path("curve.csv"), {"total_time_s", "signal", "analytic"});
  double rms = 0.0;
  for (std::size_t i = 0; i < r.total_time.size(); ++i) {
    w.row({r.total_time[i], r.signal[i], r.analytic[i]});
    rms += (r.signal[i] - r.analytic[i]) * (r.signal[i] - r.analytic[i]);
  }
  rms = std::sqrt(rms / static_cast<double>(r.total_time.size()));
  write_fit(st.path("fit.csv"), r.fit,
            {{"censored", r.fit.censored ? 1.0 : 0.0}, {"T2_analytic_s", t_analytic}, {"rms_vs_analytic", rms}});
  st.check_fit(r.fit, "stretched exponential");
}

inline AcSenseSetup ac_setup(const RunConfig& c) {
  AcSenseSetup s;
  s.family = parse_family(c.raw("sequence_family"));
  s.repeats = c.count("sensing_repeats");
  s.f_ac = c.number("f_ac_hz");
  s.tau = c.is_auto("tau_s") ? 0.0 : c.number("tau_s");
  s.ac_phase = c.number("ac_phase_rad");
  s.amplitudes = symmetric_grid(c.number("ac_max_t"), c.count("ac_points"));
  s.shots = c.count("ac_shots");
  s.zero_field_shots = c.count("zero_field_shots");
  s.t_seq = c.number("t_seq_s");
  s.seed = substream_seed(c.seed(), 0, 7);
  s.processing = processing(c);
  return s;
}

inline void run_ac_experiment(RunState& st, const EnsembleSample& ens, const OUBath& bath, bool resolution) {
  const auto& c = st.cfg;
  const auto setup = ac_setup(c);
  const auto model = readout_model(c);
  const auto pops = ac_populations(setup, ens, bath, simulation_options(c));
  const auto r = ac_readout(pops, setup, model, true);
  st.note("sequence_total_time_s", pops.total_time);
  {
    CsvWriter w(st.path("curve.csv"), {"amplitude_T", "signal_V", "sem_V", "p0_plus", "p0_minus"});
    for (std::size_t i = 0; i < r.amplitudes.size(); ++i)
      w.row({r.amplitudes[i], r.mean_signal[i], r.signal_sem[i], pops.branches[i].plus, pops.branches[i].minus});
  }
  {
    CsvWriter w(st.path("shots.csv"), {"shot_index", "s1_V", "r1_V", "s2_V", "r2_V", "S_V"});
    for (std::size_t i = 0; i < r.zero_field_shots.size(); ++i) {
      const auto& x = r.zero_field_shots[i];
      w.row({static_cast<double>(i), x.s1, x.r1, x.s2, x.r2, process(x, setup.processing)});
    }
  }
  write_report(st.path("report.csv"), r.report);
  std::vector<std::pair<std::string, double>> extra{{"phase_oracle_rad_per_T", ac_phase_oracle(1.0, pops.total_time)}};
  if (resolution) {
    auto counts = log_counts(c.count("resolution_min_avg"), c.count("resolution_max_avg"), 2);
    const auto report_avg = c.count("resolution_report_avg");
    if (report_avg > 0 && std::find(counts.begin(), counts.end(), report_avg) == counts.end()) {
      counts.push_back(report_avg);
      std::sort(counts.begin(), counts.end());
    }
    const auto res = measure_resolution(pops.zero_field.plus, pops.zero_field.minus, model, r.report.max_slope,
                                        setup.t_seq, counts, c.count("resolution_shots"),
                                        substream_seed(c.seed(), 0, 8), setup.processing);
    CsvWriter w(st.path("resolution.csv"), {"n_avg", "elapsed_s", "min_field_T", "ideal_min_field_T"});
    for (std::size_t i = 0; i < res.measured.size(); ++i)
      w.row({static_cast<double>(res.measured[i].n_avg), res.measured[i].elapsed, res.measured[i].min_field,
             res.ideal[i].min_field});
    extra.emplace_back("loglog_slope", res.slope);
    extra.emplace_back("single_shot_std_V", res.single_shot_std);
  }
  write_fit(st.path("fit.csv"), r.fit, extra);
  st.check_fit(r.fit, "sine");
}

inline void write_fieldmap(RunState& st) {
  const auto& c = st.cfg;
  const auto spec = resonator_spec(c);
  const double power = spec.drive_power;
  const auto xs = linspace(-c.number("map_half_span_m"), c.number("map_half_span_m"), c.count("map_points"));
  const double y = spec.standoff;
  CsvWriter w(st.path("fieldmap.csv"), {"x_m", "y_m", "z_m", "Bx_T", "By_T", "Bz_T", "Babs_T"});
  for (double x : xs) {
    const Vec3 b = field_per_sqrt_watt(spec, {x, y, 0.0}) * std::sqrt(power);
    w.row({x, y, 0.0, b.x, b.y, b.z, b.norm()});
  }
  const auto stats = profile_stats(spec, c.number("map_half_span_m"), c.number("flatness_window_m"),
                                   c.count("map_points"));
  CsvWriter f(st.path("fit.csv"), {"parameter", "value", "std_error"});
  f.row_cells({"peak_T", format_double(stats.peak), "0"});
  f.row_cells({"peak_position_m", format_double(stats.peak_position), "0"});
  f.row_cells({"central_variation", format_double(stats.central_variation), "0"});
  f.row_cells({"fwhm_hz", format_double(spec.f0 / spec.Q), "0"});
}

inline void write_manifest(const RunState& st, double wall) {
  std::ofstream m(st.path("manifest.txt"), std::ios::binary | std::ios::trunc);
  m << "# simulate run manifest\n";
  m << "version=" << kVersion << "\n";
  m << st.cfg.to_text();
  for (const auto& [k, v] : st.derived) m << k << "=" << v << "\n";
  m << "wall_time_s=" << format_double(wall) << "\n";
  if (!m) throw std::runtime_error("cannot write manifest");
}

}  // namespace detail

/// Runs the configured experiment and writes its CSVs plus manifest.txt to
/// out_dir. Returns an ExitCode.
inline int run(const RunConfig& c, std::ostream& out, std::ostream& err, bool fieldmap_only = false) {
  const auto start = std::chrono::steady_clock::now();
  try {
    const auto rep = check_config(c);
    for (const auto& w : rep.warnings) err << "warning: " << w << "\n";
    detail::RunState st{c, std::filesystem::path(c.raw("out_dir")), {}, false, {}};
    std::filesystem::create_directories(st.dir);
    const auto& kind = c.raw("experiment");
    if (fieldmap_only || kind == "fieldmap") {
      detail::write_fieldmap(st);
    } else if (kind == "odmr") {
      detail::run_odmr_experiment(st);
    } else {
      const OUBath bath = bath_for(c);
      st.note("bath_b_rad_s_resolved", bath.b);
      const auto noise = noise_model(c, bath);
      st.note("sigma_delta_rad_s", noise.quasi_static.sigma_delta);
      st.note("nv_count_physical", c.number("nv_density_m3") * c.number("volume_m3"));
      st.note("geometric_volume_m3", detection_volume(c).geometric_volume());
      const auto eb = build_ensemble(c, noise);
      if (c.raw("drive") == "resonator") st.note("drive_power_w_resolved", eb.drive_power);
      if (kind == "rabi") detail::run_rabi_experiment(st, eb.ensemble);
      else if (kind == "fid" || kind == "echo" || kind == "xy16")
        detail::run_coherence_experiment(st, eb.ensemble, bath, noise);
      else detail::run_ac_experiment(st, eb.ensemble, bath, kind == "resolution");
    }
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    detail::write_manifest(st, wall);
    if (st.fit_failed) {
      err << "numerical error: " << st.failure << "\n";
      return ExitCode::numerical_error;
    }
    out << "wrote " << st.dir.string() << "\n";
    return ExitCode::ok;
  } catch (const ConfigError& e) {
    err << "config error [" << e.key() << "]: " << e.what() << "\n";
    return ExitCode::config_error;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << "\n";
    return ExitCode::numerical_error;
  } catch (const std::invalid_argument& e) {
    err << "config error: " << e.what() << "\n";
    return ExitCode::config_error;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return ExitCode::failure;
  }
}

}  // namespace nvmag::cli
