// Command-line front end for the experiment runners.

#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "qst/experiments.hpp"

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  int workers = 1;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quantum state transfer simulations in the single-excitation sector"};
  app.set_version_flag("--version", std::string("qst ") + qst::kVersion);
  app.require_subcommand(1);

  Common common;
  std::string chosen;
  for (const auto& name : qst::experiment_names()) {
    CLI::App* sub = app.add_subcommand(name, "run the " + name + " experiment");
    sub->add_option("--config", common.config, "JSON configuration file")->check(CLI::ExistingFile);
    sub->add_option("--seed", common.seed, "seed overriding the config");
    sub->add_option("--out", common.out, "output CSV path (default: config output or stdout)");
    sub->add_option("--workers", common.workers, "worker threads for ensembles")->check(CLI::Range(1, 1024));
    sub->callback([&chosen, name] { chosen = name; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  qst::ExperimentConfig cfg;
  try {
    cfg = common.config.empty() ? qst::default_config(chosen) : qst::load_config(common.config, chosen);
    if (common.seed) cfg.seed = *common.seed;
    cfg.raw = qst::resolved_json(cfg);
  } catch (const qst::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }

  qst::RunResult res;
  try {
    res = qst::run_experiment(cfg, common.workers);
  } catch (const qst::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }

  const std::string path = !common.out.empty() ? common.out : cfg.output;
  if (path.empty()) {
    qst::write_csv(std::cout, res.table);
  } else {
    std::ofstream os(path);
    if (!os) {
      std::cerr << "error: cannot write '" << path << "'\n";
      return 1;
    }
    qst::write_csv(os, res.table);
  }
  if (!res.message.empty()) std::cerr << res.message << '\n';
  return res.exit_code;
}
