// Experiment harness CLI. Thin wrapper over the poissonlab C API.
#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "poissonlab.h"

namespace {

int run(const std::string& subcommand, const std::string& config_path, long long seed,
        int workers, const std::string& out_dir) {
  std::ifstream in(config_path);
  if (!in) {
    std::cerr << "error: cannot read config file: " << config_path << "\n";
    return 2;
  }
  std::stringstream buf;
  buf << in.rdbuf();

  int exit_code = 2;
  char* report = nullptr;
  const plab_status st =
      plab_run(subcommand.c_str(), buf.str().c_str(), out_dir.empty() ? nullptr : out_dir.c_str(),
               seed, workers, &exit_code, &report);
  if (report) {
    std::cout << report;
    plab_string_free(report);
  }
  if (st != PLAB_OK) {
    std::cerr << "error (" << plab_status_name(st) << "): " << plab_last_error() << "\n";
    return exit_code == 0 ? 2 : exit_code;
  }
  return exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"poissonlab experiment harness"};
  app.set_version_flag("--version", std::string(plab_version()));

  std::string config_path;
  long long seed = -1;
  int workers = 0;
  std::string out_dir;

  const std::vector<std::string> names = {"simulate", "clark-ocone", "girsanov-check",
                                          "transport-check", "duality"};
  for (const std::string& name : names) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "experiment configuration file (JSON)")
        ->required();
    sub->add_option("--seed", seed, "override the config seed");
    sub->add_option("--workers", workers, "worker threads (default: config value)");
    sub->add_option("--out", out_dir, "output directory (default: config value)");
  }
  app.require_subcommand(1);

  CLI11_PARSE(app, argc, argv);

  for (const std::string& name : names)
    if (app.get_subcommand(name)->parsed()) return run(name, config_path, seed, workers, out_dir);
  return 2;
}
