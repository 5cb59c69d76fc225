#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "nvmag/cli.hpp"

namespace {

int load_and(const std::string& path, const std::vector<std::string>& sets, const std::string& seed,
             const std::string& out_dir, const std::string& threads, auto&& action) {
  try {
    auto cfg = nvmag::RunConfig::load(path);
    if (!seed.empty()) cfg.set("seed", seed);
    if (!out_dir.empty()) cfg.set("out_dir", out_dir);
    if (!threads.empty()) cfg.set("threads", threads);
    for (const auto& s : sets) cfg.apply_override(s);
    return action(cfg);
  } catch (const nvmag::ConfigError& e) {
    std::cerr << "config error [" << e.key() << "]: " << e.what() << "\n";
    return nvmag::cli::ExitCode::config_error;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"NV-ensemble magnetometry simulator"};
  app.set_version_flag("--version", nvmag::cli::kVersion);
  app.require_subcommand(1);

  std::string config, seed, out_dir, threads;
  std::vector<std::string> sets;

  auto* run = app.add_subcommand("run", "run the configured experiment");
  run->add_option("config", config, "config file")->required();
  run->add_option("--seed", seed, "override the master seed");
  run->add_option("--out", out_dir, "override the output directory");
  run->add_option("--threads", threads, "override the worker thread count");
  run->add_option("--set", sets, "override any key, key=value (repeatable)");

  auto* validate = app.add_subcommand("validate", "check a config without running it");
  validate->add_option("config", config, "config file")->required();
  validate->add_option("--set", sets, "override any key, key=value (repeatable)");

  auto* fieldmap = app.add_subcommand("fieldmap", "write the resonator field profile");
  fieldmap->add_option("config", config, "config file")->required();
  fieldmap->add_option("--out", out_dir, "override the output directory");
  fieldmap->add_option("--set", sets, "override any key, key=value (repeatable)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : nvmag::cli::ExitCode::config_error;
  }

  if (run->parsed())
    return load_and(config, sets, seed, out_dir, threads,
                    [](const nvmag::RunConfig& c) { return nvmag::cli::run(c, std::cout, std::cerr); });
  if (validate->parsed())
    return load_and(config, sets, "", "", "",
                    [](const nvmag::RunConfig& c) { return nvmag::cli::validate(c, std::cout, std::cerr); });
  return load_and(config, sets, "", out_dir, "",
                  [](const nvmag::RunConfig& c) { return nvmag::cli::run(c, std::cout, std::cerr, true); });
}
