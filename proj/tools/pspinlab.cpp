#include <string>
#include <thread>

#include <CLI11.hpp>

#include "pspin/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"pspinlab -- mixed p-spin ground-state laboratory"};
  app.set_version_flag("--version", std::string("pspinlab ") +
                                        pspin::cli::kToolVersion);
  app.require_subcommand(1);

  const std::vector<std::string> experiments = {
      "chaos-curve", "field-curve",        "slice-decay", "superconc",
      "barycenter",  "conditional-overlap", "solve",       "convexity-report"};

  struct Args {
    std::string config;
    std::string out;
    int workers = int(std::thread::hardware_concurrency());
  };
  std::map<std::string, Args> args;

  for (const auto& name : experiments) {
    auto* sub = app.add_subcommand(name);
    auto& a = args[name];
    sub->add_option("--config", a.config, "path to the run config")->required();
    sub->add_option("--workers", a.workers,
                    "worker thread count (speed only, never affects output)");
    sub->add_option("--out", a.out, "output directory (overrides config)");
  }

  CLI11_PARSE(app, argc, argv);

  const std::string name = app.get_subcommands().front()->get_name();
  const Args& a = args[name];
  pspin::cli::RunOptions options;
  options.workers = std::max(1, a.workers);
  options.experiment_override = name;
  if (!a.out.empty()) options.out_override = a.out;
  return pspin::cli::run(a.config, options);
}
