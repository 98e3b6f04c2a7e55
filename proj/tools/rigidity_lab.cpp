#include <rigidity_lab/rigidity_lab.hpp>

#include <CLI11.hpp>

#include <chrono>
#include <ctime>
#include <iostream>

namespace rl = rigidity_lab;

namespace {

std::string utc_now() {
  std::time_t t = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

std::string suite_list() {
  std::string s;
  for (const auto& n : rl::suite_names()) s += (s.empty() ? "" : " | ") + n;
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Numerical verification suites for spinorial rigidity."};
  std::string suite, config, out;
  std::uint64_t seed = 0;
  int jobs = rl::hardware_jobs();
  app.add_option("suite", suite, "one of: " + suite_list())->required();
  app.add_option("--config", config, "JSON configuration file")->required();
  auto* seed_opt = app.add_option("--seed", seed, "random seed (overrides the config)");
  app.add_option("--out", out, "output directory (overrides the config; default out/<suite>)");
  app.add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
  app.set_version_flag("--version", rl::kVersion);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (!rl::known_suite(suite)) {
    std::cerr << "error: unknown suite '" << suite << "' (expected " << suite_list() << ")\n";
    return 2;
  }
  const auto t0 = std::chrono::steady_clock::now();
  const std::string started = utc_now();
  rl::SuiteConfig cfg;
  rl::SuiteResult result;
  try {
    cfg = rl::load_config(config);
    if (!cfg.suite.empty() && cfg.suite != suite)
      throw rl::ConfigError("config is for suite '" + cfg.suite + "', not '" + suite + "'");
    cfg.suite = suite;
    if (seed_opt->count()) cfg.seed = seed;
    if (!out.empty()) cfg.out = out;
    if (cfg.out.empty()) cfg.out = "out/" + suite;
    result = rl::run_suite(cfg, jobs);
  } catch (const rl::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    rl::write_artifacts(result, cfg.out);
    rl::RunMeta meta;
    meta.version = rl::kVersion;
    meta.started_utc = started;
    meta.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    meta.jobs = jobs;
    meta.config_path = config;
    rl::write_meta(result, meta, cfg.out);
  } catch (const std::exception& e) {
    std::cerr << "error: writing outputs failed: " << e.what() << "\n";
    return 2;
  }

  for (const auto& w : result.warnings) std::cerr << "warning: " << w << "\n";
  std::size_t failed = 0;
  for (const auto& c : result.checks) {
    if (c.pass()) continue;
    ++failed;
    std::cerr << "FAIL " << c.id << " [" << c.anchor << "] measured " << rl::format_double(c.measured) << " "
              << rl::comparison_name(c.cmp) << " " << rl::format_double(c.tolerance);
    if (c.cmp == rl::Comparison::InRange) std::cerr << ".." << rl::format_double(c.upper);
    std::cerr << "\n";
  }
  std::cout << suite << ": " << result.checks.size() - failed << "/" << result.checks.size() << " checks passed -> "
            << cfg.out << "\n";
  return failed ? 1 : 0;
}
