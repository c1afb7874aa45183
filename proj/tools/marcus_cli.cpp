// Command-line front end: converge, verify, paths.

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "marcus/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Wong-Zakai scheme for Marcus SDEs: weak-order experiments and checks"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  unsigned workers = 1;
  bool reproducible = false;
  std::size_t n_export = 10;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "experiment INI file")->required();
    sub->add_option("--seed", seed, "override run.seed");
    sub->add_option("--out", out_dir, "override run.out_dir");
    sub->add_option("--paths-parallel", workers, "worker threads")->check(CLI::PositiveNumber);
    sub->add_flag("--reproducible", reproducible, "fixed-order reduction");
  };
  CLI::App* converge = app.add_subcommand("converge", "weak-error ladder and order fit");
  CLI::App* verify = app.add_subcommand("verify", "generator identity and hypothesis checks");
  CLI::App* paths = app.add_subcommand("paths", "export coupled sample paths");
  common(converge);
  common(verify);
  common(paths);
  paths->add_option("--n", n_export, "number of paths (at most 1000)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : marcus::kExitConfig;
  }

  marcus::ExperimentConfig cfg;
  try {
    cfg = marcus::load_config(config_path);
    if (seed) cfg.seed = *seed;
    if (out_dir) cfg.out_dir = *out_dir;
    marcus::validate(cfg);
  } catch (const marcus::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return marcus::kExitConfig;
  }

  marcus::CommandOptions opt;
  opt.pool.workers = workers;
  opt.pool.reproducible = reproducible;
  opt.n_export = n_export;

  if (*converge) return marcus::cmd_converge(cfg, opt, std::cout);
  if (*verify) return marcus::cmd_verify(cfg, opt, std::cout);
  return marcus::cmd_paths(cfg, opt, std::cout);
}
