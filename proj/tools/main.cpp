#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "commands.hpp"

int main(int argc, char** argv) {
  sysrisk::cli::RunSpec run;
  CLI::App app{"sysrisk: co-default probabilities under a multivariate Cox-process model"};
  app.add_option("--scenario", run.scenario, "YAML scenario file");
  app.add_option("--command", run.command, "report, figure1, ksweep, bounds, cstatics or validate")
      ->check(CLI::IsMember({"report", "figure1", "ksweep", "bounds", "cstatics", "validate"}));
  app.add_option("--seed", run.seed, "Monte Carlo seed");
  app.add_option("--n", run.replications, "Monte Carlo replications (0 disables Monte Carlo)");
  app.add_option("--epsilon", run.epsilon, "override the scenario window");
  app.add_option("--backend", run.backend, "exact backend")
      ->check(CLI::IsMember({"auto", "analytic", "pathwise", "mc"}));
  app.add_option("--out", run.out, "CSV output file (default stdout)");
  app.add_option("--subset-size", run.subset_size, "random permutations in the partial upper bound (0: identity)");
  app.add_flag("--destructive", run.destructive, "ksweep: every bank intensity becomes ln(K) + base");
  app.add_option("--threads", run.threads, "Monte Carlo worker threads (0: hardware concurrency)");
  app.add_option("--grid", run.grid, "figure1: number of alpha0 grid points")->check(CLI::Range(2, 100000));
  app.add_option("--k-min", run.k_min, "ksweep: smallest K");
  app.add_option("--k-max", run.k_max, "ksweep: largest K");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // Help and version exit 0; every other parse error is bad input.
    app.exit(e);
    return e.get_exit_code() == 0 ? 0 : 2;
  }

  const sysrisk::cli::CommandResult result = sysrisk::cli::run_command(run);
  for (const auto& d : result.diagnostics) std::cerr << "sysrisk: " << d << '\n';
  if (run.out.empty()) {
    std::cout << result.csv;
  } else {
    std::ofstream out(run.out, std::ios::binary);
    if (!out) {
      std::cerr << "sysrisk: cannot write '" << run.out << "'\n";
      return 2;
    }
    out << result.csv;
  }
  return result.exit_code;
}
