// Command-line front end.  All real work lives behind the C API; this file
// only parses flags and forwards them.
#include <cstdint>
#include <cstdio>
#include <string>

#include "CLI11.hpp"
#include "robinflux.h"

int main(int argc, char** argv) {
  CLI::App app{"robinflux: Robin boundary-value laboratory"};
  app.set_version_flag("--version", rf_version());
  app.require_subcommand(1);

  std::string config, out;
  uint64_t seed = 0;
  int jobs = 0;
  double accept_const = 0.0;
  bool resume = false;

  const char* names[] = {"gen-domain", "green-checks", "hm-checks", "flux",
                         "report"};
  const char* briefs[] = {
      "build the configured domain, save it and fit its boundary dimension",
      "Green function oracle, certificate, order and regime checks",
      "harmonic measure mass, comparison and stability checks",
      "sweep the total-flow curve F(a) with phase and entropy analysis",
      "verify artifact hashes in an output directory and write report.md"};
  for (int i = 0; i < 5; ++i) {
    CLI::App* sub = app.add_subcommand(names[i], briefs[i]);
    sub->add_option("--config", config, "JSON config path");
    sub->add_option("--out", out, "output directory (overrides config)");
    sub->add_option("--seed", seed, "RNG seed (overrides config)");
    sub->add_option("--jobs", jobs,
                    "worker threads (overrides ROBINFLUX_JOBS and config)");
    sub->add_option("--accept-const", accept_const,
                    "scale all acceptance constants by this factor");
    if (std::string(names[i]) == "flux")
      sub->add_flag("--resume", resume, "reuse cached solves from a prior run");
  }

  CLI11_PARSE(app, argc, argv);

  std::string command = app.get_subcommands().front()->get_name();
  int exit_code = 1;
  rf_status st = rf_run_command(
      command.c_str(), config.empty() ? nullptr : config.c_str(),
      out.empty() ? nullptr : out.c_str(), seed, jobs, accept_const,
      resume ? 1 : 0, &exit_code);
  if (st != RF_OK) {
    std::fprintf(stderr, "error: %s\n", rf_last_error());
    return 1;
  }
  return exit_code;
}
