#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include "nvmag/cli.hpp"

using namespace nvmag;
namespace fs = std::filesystem;

namespace {

std::string config_path(const char* name) { return std::string(NVMAG_CONFIG_DIR) + "/" + name; }

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("nvmag_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string manifest_without_wall_time(const fs::path& dir) {
  std::istringstream in(slurp(dir / "manifest.txt"));
  std::string line, out;
  while (std::getline(in, line))
    if (line.rfind("wall_time_s=", 0) != 0) out += line + "\n";
  return out;
}

double fit_value(const fs::path& dir, const std::string& name) {
  std::istringstream in(slurp(dir / "fit.csv"));
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind(name + ",", 0) == 0) return std::stod(line.substr(name.size() + 1));
  }
  ADD_FAILURE() << name << " missing from fit.csv";
  return 0.0;
}

struct Outcome {
  int code;
  std::string out, err;
};

Outcome run_in_process(const RunConfig& c, bool fieldmap_only = false) {
  std::ostringstream out, err;
  const int code = cli::run(c, out, err, fieldmap_only);
  return {code, out.str(), err.str()};
}

Outcome validate_in_process(const RunConfig& c) {
  std::ostringstream out, err;
  const int code = cli::validate(c, out, err);
  return {code, out.str(), err.str()};
}

// Runs the simulate executable, returning its exit status and stderr.
Outcome run_exe(const std::string& args, const fs::path& work) {
  const auto err_file = work / "stderr.txt";
  const auto out_file = work / "stdout.txt";
  const std::string cmd = std::string("\"") + NVMAG_SIMULATE_EXE + "\" " + args + " >\"" + out_file.string() +
                          "\" 2>\"" + err_file.string() + "\"";
  const int status = std::system(cmd.c_str());
  const int code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return {code, slurp(out_file), slurp(err_file)};
}

RunConfig small_echo(const fs::path& out) {
  auto c = RunConfig::load(config_path("echo.cfg"));
  c.set("n_spins", "120");
  c.set("sweep_points", "8");
  c.set("out_dir", out.string());
  return c;
}

}  // namespace

TEST(Config, ParsesCommentsWhitespaceAndDefaults) {
  const auto c = RunConfig::parse("  # header\nexperiment = rabi   # trailing\n\n\tn_spins=250\r\n");
  EXPECT_EQ(c.raw("experiment"), "rabi");
  EXPECT_EQ(c.count("n_spins"), 250u);
  EXPECT_EQ(c.raw("pi_time_s"), "48e-9");
  EXPECT_TRUE(c.is_auto("bath_b_rad_s"));
  EXPECT_EQ(c.entries().size(), config_schema().size());
}

TEST(Config, UnknownKeyIsNamed) {
  try {
    RunConfig::parse("experiment = echo\ntau_ms = 0.1\n");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.key(), "tau_ms");
    EXPECT_NE(std::string(e.what()).find("tau_ms"), std::string::npos);
  }
}

TEST(Config, RejectsDuplicatesAndMalformedValues) {
  auto key_of = [](const std::string& text) {
    try {
      RunConfig::parse(text);
    } catch (const ConfigError& e) {
      return e.key();
    }
    return std::string("<none>");
  };
  EXPECT_EQ(key_of("seed = 1\nseed = 2\n"), "seed");
  EXPECT_EQ(key_of("n_spins = 10.5\n"), "n_spins");
  EXPECT_EQ(key_of("n_spins = -3\n"), "n_spins");
  EXPECT_EQ(key_of("pi_time_s = fast\n"), "pi_time_s");
  EXPECT_EQ(key_of("pi_time_s = auto\n"), "pi_time_s");
  EXPECT_EQ(key_of("pi_time_s = inf\n"), "pi_time_s");
  EXPECT_EQ(key_of("experiment = spectroscopy\n"), "experiment");
  EXPECT_EQ(key_of("seed = -1\n"), "seed");
  EXPECT_EQ(key_of("t2star_s = inf\n"), "<none>");
  EXPECT_EQ(key_of("no equals sign\n"), "no equals sign");
}

TEST(Config, OverridesReplaceValues) {
  auto c = RunConfig::load(config_path("paper_defaults.cfg"));
  c.apply_override("n_spins = 77");
  EXPECT_EQ(c.count("n_spins"), 77u);
  EXPECT_THROW(c.apply_override("n_spins"), ConfigError);
  EXPECT_THROW(c.apply_override("tau_ms=1"), ConfigError);
  const auto reparsed = RunConfig::parse(c.to_text());
  EXPECT_EQ(reparsed.to_text(), c.to_text());
}

TEST(Config, ShippedConfigsLoadAndValidate) {
  for (const char* name : {"paper_defaults.cfg", "odmr.cfg", "rabi.cfg", "fid.cfg", "echo.cfg", "xy16.cfg",
                           "ac_sense.cfg", "resolution.cfg", "fieldmap.cfg"}) {
    const auto r = validate_in_process(RunConfig::load(config_path(name)));
    EXPECT_EQ(r.code, cli::ExitCode::ok) << name << ": " << r.err;
  }
}

TEST(Validate, PaperDefaultsReportsOk) {
  const auto c = RunConfig::load(config_path("paper_defaults.cfg"));
  const auto r = validate_in_process(c);
  EXPECT_EQ(r.code, cli::ExitCode::ok);
  EXPECT_EQ(r.out.rfind("ok\n", 0), 0u);
  for (const auto& [k, v] : c.entries()) EXPECT_NE(r.out.find(k + "=" + v + "\n"), std::string::npos) << k;
  EXPECT_TRUE(r.err.empty()) << r.err;
}

TEST(Validate, NegativeT2StarIsAnError) {
  auto c = RunConfig::load(config_path("fid.cfg"));
  c.set("t2star_s", "-150e-9");
  const auto r = validate_in_process(c);
  EXPECT_EQ(r.code, cli::ExitCode::config_error);
  EXPECT_NE(r.err.find("t2star_s"), std::string::npos);
}

TEST(Validate, SpacingMismatchWarnsWithBothValues) {
  auto c = RunConfig::load(config_path("ac_sense.cfg"));
  c.set("tau_s", "1.45e-6");
  const auto r = validate_in_process(c);
  EXPECT_EQ(r.code, cli::ExitCode::ok);
  EXPECT_NE(r.err.find("warning"), std::string::npos);
  EXPECT_NE(r.err.find(format_double(1.45e-6)), std::string::npos) << r.err;
  EXPECT_NE(r.err.find(format_double(0.5 / 362e3)), std::string::npos) << r.err;
  c.set("tau_s", format_double(1.005 * 0.5 / 362e3));
  EXPECT_TRUE(validate_in_process(c).err.empty());
}

TEST(Validate, FinitePulsesMustFitTheSpacing) {
  auto c = RunConfig::load(config_path("ac_sense.cfg"));
  c.set("pulse_mode", "finite");
  c.set("pi_time_s", "2e-6");
  EXPECT_EQ(validate_in_process(c).code, cli::ExitCode::config_error);
}

TEST(Run, RabiConfigRecoversPiTime) {
  const auto dir = scratch("rabi");
  auto c = RunConfig::load(config_path("rabi.cfg"));
  c.set("n_spins", "200");
  c.set("out_dir", dir.string());
  const auto r = run_in_process(c);
  ASSERT_EQ(r.code, cli::ExitCode::ok) << r.err;
  EXPECT_NEAR(fit_value(dir, "t_pi_s"), 4.8e-8, 0.5e-9);
  for (const char* f : {"curve.csv", "fit.csv", "manifest.txt"}) EXPECT_TRUE(fs::exists(dir / f)) << f;
  const auto manifest = slurp(dir / "manifest.txt");
  EXPECT_NE(manifest.find("seed=20240101\n"), std::string::npos);
  EXPECT_NE(manifest.find(std::string("version=") + cli::kVersion + "\n"), std::string::npos);
  EXPECT_NE(manifest.find("wall_time_s="), std::string::npos);
}

TEST(Run, CsvFormat) {
  const auto dir = scratch("format");
  auto c = RunConfig::load(config_path("odmr.cfg"));
  c.set("out_dir", dir.string());
  ASSERT_EQ(run_in_process(c).code, cli::ExitCode::ok);
  const auto curve = slurp(dir / "curve.csv");
  EXPECT_EQ(curve.rfind("frequency_hz,signal\n", 0), 0u);
  EXPECT_EQ(curve.find('\r'), std::string::npos);
  EXPECT_EQ(curve.back(), '\n');
  std::size_t lines = 0;
  for (char ch : curve) lines += ch == '\n';
  EXPECT_EQ(lines, c.count("odmr_points") + 1);
}

TEST(Run, UnresolvableSweepIsAConfigError) {
  const auto dir = scratch("nodecay");
  auto c = small_echo(dir);
  c.set("bath_b_rad_s", "0");
  const auto r = run_in_process(c);
  EXPECT_EQ(r.code, cli::ExitCode::config_error);
  EXPECT_NE(r.err.find("sweep_max_s"), std::string::npos);
}

TEST(Run, ByteIdenticalAcrossRunsAndThreads) {
  const auto a = scratch("det_a"), b = scratch("det_b"), d = scratch("det_d");
  auto c = small_echo(a);
  ASSERT_EQ(run_in_process(c).code, cli::ExitCode::ok);
  c.set("out_dir", b.string());
  ASSERT_EQ(run_in_process(c).code, cli::ExitCode::ok);
  c.set("out_dir", d.string());
  c.set("threads", "3");
  ASSERT_EQ(run_in_process(c).code, cli::ExitCode::ok);
  for (const char* f : {"curve.csv", "fit.csv"}) {
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
    EXPECT_EQ(slurp(a / f), slurp(d / f)) << f;
  }
  const auto e = scratch("det_e");
  c.set("out_dir", e.string());
  c.set("seed", "5");
  ASSERT_EQ(run_in_process(c).code, cli::ExitCode::ok);
  EXPECT_NE(slurp(a / "curve.csv"), slurp(e / "curve.csv"));
}

TEST(Run, AcSenseByteIdenticalAcrossThreads) {
  const auto a = scratch("ac_a"), b = scratch("ac_b");
  auto c = RunConfig::load(config_path("ac_sense.cfg"));
  c.set("n_spins", "60");
  c.set("ac_points", "9");
  c.set("ac_shots", "200");
  c.set("zero_field_shots", "500");
  c.set("out_dir", a.string());
  ASSERT_EQ(run_in_process(c).code, cli::ExitCode::ok);
  c.set("out_dir", b.string());
  c.set("threads", "2");
  ASSERT_EQ(run_in_process(c).code, cli::ExitCode::ok);
  for (const char* f : {"curve.csv", "fit.csv", "shots.csv", "report.csv"}) EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
}

// Perturbs every key in turn; each perturbation must show up in the manifest,
// the written outputs, or the exit code.
TEST(Run, ManifestCoversEveryKey) {
  const auto base_dir = scratch("fuzz");
  auto base = RunConfig::load(config_path("odmr.cfg"));
  base.set("out_dir", (base_dir / "run").string());
  ASSERT_EQ(run_in_process(base).code, cli::ExitCode::ok);
  const auto ref_manifest = manifest_without_wall_time(base_dir / "run");
  const auto ref_curve = slurp(base_dir / "run" / "curve.csv");

  for (const auto& spec : config_schema()) {
    auto c = base;
    const std::string v = c.raw(spec.name);
    std::string next;
    switch (spec.kind) {
      case KeyKind::number:
        next = v == "auto" ? "1e-3" : format_double(v == "0" ? 1e-3 : 1.5 * c.number(spec.name));
        break;
      case KeyKind::count:
      case KeyKind::seed:
        next = std::to_string(c.count(spec.name) + 1);
        break;
      case KeyKind::choice:
        next = spec.name == "experiment" ? "fieldmap" : (v == spec.choices[0] ? spec.choices[1] : spec.choices[0]);
        break;
      case KeyKind::text:
        next = (base_dir / "other").string();
        break;
    }
    c.set(spec.name, next);
    const auto dir = fs::path(c.raw("out_dir"));
    fs::remove_all(base_dir / "run");
    const auto r = run_in_process(c);
    if (r.code != cli::ExitCode::ok) continue;
    const bool manifest_differs = manifest_without_wall_time(dir) != ref_manifest;
    const bool curve_differs = !fs::exists(dir / "curve.csv") || slurp(dir / "curve.csv") != ref_curve;
    EXPECT_TRUE(manifest_differs || curve_differs) << spec.name;
    EXPECT_NE(manifest_without_wall_time(dir).find(spec.name + "=" + next + "\n"), std::string::npos) << spec.name;
  }
}

TEST(Executable, UnknownKeyExitsWithTwo) {
  const auto dir = scratch("exe_unknown");
  {
    std::ofstream f(dir / "bad.cfg");
    f << "experiment = echo\ntau_ms = 0.1\n";
  }
  const auto r = run_exe("run \"" + (dir / "bad.cfg").string() + "\"", dir);
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("tau_ms"), std::string::npos) << r.err;
  const auto v = run_exe("validate \"" + (dir / "bad.cfg").string() + "\"", dir);
  EXPECT_EQ(v.code, 2);
  const auto s = run_exe("run \"" + config_path("odmr.cfg") + "\" --set tau_ms=1", dir);
  EXPECT_EQ(s.code, 2);
  EXPECT_NE(s.err.find("tau_ms"), std::string::npos);
  EXPECT_EQ(run_exe("run \"" + (dir / "missing.cfg").string() + "\"", dir).code, 2);
}

TEST(Executable, VersionAndValidate) {
  const auto dir = scratch("exe_version");
  const auto r = run_exe("--version", dir);
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find(cli::kVersion), std::string::npos);
  const auto v = run_exe("validate \"" + config_path("paper_defaults.cfg") + "\"", dir);
  EXPECT_EQ(v.code, 0);
  EXPECT_EQ(v.out.rfind("ok\n", 0), 0u);
}

TEST(Executable, RunFlagsAndThreadIndependence) {
  const auto a = scratch("exe_a"), b = scratch("exe_b");
  const std::string cfg = "\"" + config_path("echo.cfg") + "\" --set n_spins=80 --set sweep_points=6 --seed 11";
  ASSERT_EQ(run_exe("run " + cfg + " --threads 1 --out \"" + (a / "o").string() + "\"", a).code, 0);
  ASSERT_EQ(run_exe("run " + cfg + " --threads 2 --out \"" + (b / "o").string() + "\"", b).code, 0);
  EXPECT_EQ(slurp(a / "o" / "curve.csv"), slurp(b / "o" / "curve.csv"));
  EXPECT_EQ(slurp(a / "o" / "fit.csv"), slurp(b / "o" / "fit.csv"));
  EXPECT_NE(slurp(a / "o" / "manifest.txt").find("seed=11\n"), std::string::npos);
  EXPECT_NE(slurp(a / "o" / "manifest.txt").find("n_spins=80\n"), std::string::npos);
}

TEST(Executable, FieldmapWritesProfile) {
  const auto dir = scratch("exe_map");
  const auto r = run_exe("fieldmap \"" + config_path("fieldmap.cfg") + "\" --set map_points=41 --out \"" +
                             (dir / "o").string() + "\"",
                         dir);
  ASSERT_EQ(r.code, 0) << r.err;
  const auto map = slurp(dir / "o" / "fieldmap.csv");
  EXPECT_EQ(map.rfind("x_m,y_m,z_m,Bx_T,By_T,Bz_T,Babs_T\n", 0), 0u);
  EXPECT_GT(fit_value(dir / "o", "peak_T"), 0.0);
}
