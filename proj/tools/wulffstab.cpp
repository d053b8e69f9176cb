// Command-line experiment runner.
//
//   wulffstab <wulff|curvature|kernel|center|sweep|einstein> [--config PATH] [--seed N] [--out DIR] [--svg]
//
// Exit codes: 0 all checks pass, 1 a check or certificate failed, 2 invalid configuration.

#include <cstdio>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "wulffstab/experiments.hpp"

int main(int argc, char** argv) {
  using namespace wulffstab;
  CLI::App app{"Wulff-shape stability experiments"};
  app.require_subcommand(1, 1);

  std::string config_path, out_dir;
  std::uint64_t seed = 0;
  bool svg = false;
  const char* names[][2] = {{"wulff", "build the Wulff shape and check the gauge and Robin identities"},
                            {"curvature", "anisotropic shape operator, deficit and oscillation"},
                            {"kernel", "stability operator kernel and Y2 eigenvalue"},
                            {"center", "centering fixed point on a translated Wulff shape"},
                            {"sweep", "deficit and distance scaling over the amplitude list"},
                            {"einstein", "Ricci spectra, pinching, zero sets and ratio bounds"}};
  std::vector<CLI::App*> subs;
  for (const auto& n : names) {
    CLI::App* s = app.add_subcommand(n[0], n[1]);
    s->add_option("--config", config_path, "experiment config file");
    s->add_option("--seed", seed, "RNG seed (overrides the config)");
    s->add_option("--out", out_dir, "output directory (overrides the config)");
    s->add_flag("--svg", svg, "also write SVG line plots");
    subs.push_back(s);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  std::string sub;
  CLI::App* chosen = nullptr;
  for (CLI::App* s : subs)
    if (s->parsed()) {
      sub = s->get_name();
      chosen = s;
    }

  ExperimentConfig cfg;
  try {
    if (!config_path.empty()) {
      cfg = make_config(ConfigFile::load(config_path));
    } else {
      std::istringstream empty;
      cfg = make_config(ConfigFile::parse(empty, "<defaults>"));
    }
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  if (chosen->count("--seed")) cfg.seed = seed;
  if (chosen->count("--out")) cfg.out = out_dir;

  try {
    const RunResult r = run(sub, cfg, {cfg.out, svg});
    for (const auto& c : r.checks)
      std::printf("%-4s %-60s %.6g (%s)\n", c.pass ? "ok" : "FAIL", c.name.c_str(), c.value, c.bound.c_str());
    if (!r.ok()) std::fprintf(stderr, "check failure, report: %s\n", r.report.string().c_str());
    return r.exit_code;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
