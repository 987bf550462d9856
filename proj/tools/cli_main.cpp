// Command-line front-end for the pipeline. All work happens behind the C
// API; this file only parses flags and maps status codes to exit codes.
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hsicnet.h"

namespace {

int exit_code_for(hsn_status s) {
  switch (s) {
    case HSN_OK:
      return 0;
    case HSN_ERROR_INVALID_ARGUMENT:
    case HSN_ERROR_CONFIG:
      return 2;
    case HSN_ERROR_DATA:
      return 3;
    case HSN_ERROR_NUMERIC:
      return 4;
    case HSN_ERROR_INTERNAL:
      break;
  }
  return 1;
}

struct SubcommandHelp {
  const char* name;
  const char* help;
};

constexpr SubcommandHelp kCommands[] = {
    {"synth", "generate a labeled synthetic dataset plus ground-truth events"},
    {"features", "extract hand-engineered feature tables from a dataset"},
    {"train", "train the classifier with the independence penalty"},
    {"sweep", "train across a list of penalty weights and tabulate trade-offs"},
    {"eval", "score a checkpoint: metrics plus auxiliary probe protocols"},
    {"cam", "landmark-aligned activation templates for a checkpoint"},
    {"noise", "activation template decay under landmark corruption"},
    {"report", "merge metrics from several runs into one CSV"},
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"physiological-signal classifier with an HSIC independence "
               "penalty and activation-map localization"};
  app.set_version_flag("--version", hsn_version());
  app.require_subcommand(1);

  std::string config, out;
  std::vector<std::string> sets;
  std::uint64_t seed = 0;

  for (const auto& c : kCommands) {
    CLI::App* sc = app.add_subcommand(c.name, c.help);
    sc->add_option("--config", config, "experiment config (JSON)")
        ->required();
    sc->add_option("--out", out, "output directory for artifacts")
        ->required();
    sc->add_option("--seed", seed, "override the config seed");
    sc->add_option("--set", sets,
                   "config override as dotted.path=value (repeatable)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);  // --help / --version
  } catch (const CLI::ParseError& e) {
    app.exit(e);  // prints the usage error
    return 2;
  }

  CLI::App* sub = app.get_subcommands().front();
  std::vector<std::string> overrides = sets;
  if (sub->count("--seed") > 0)
    overrides.push_back("seed=" + std::to_string(seed));
  std::vector<const char*> override_ptrs;
  for (const auto& o : overrides) override_ptrs.push_back(o.c_str());

  hsn_experiment* experiment = nullptr;
  hsn_status st =
      hsn_experiment_open(config.c_str(), override_ptrs.data(),
                          override_ptrs.size(), &experiment);
  if (st != HSN_OK) {
    std::fprintf(stderr, "error: %s\n", hsn_last_error());
    return exit_code_for(st);
  }

  st = hsn_experiment_run(experiment, sub->get_name().c_str(), out.c_str());
  hsn_experiment_close(experiment);
  if (st != HSN_OK) {
    std::fprintf(stderr, "error: %s\n", hsn_last_error());
    return exit_code_for(st);
  }
  std::printf("%s: artifacts written to %s\n", sub->get_name().c_str(),
              out.c_str());
  return 0;
}
