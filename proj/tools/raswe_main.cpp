#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "raswe/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Single-anchor UAV position estimator with adaptive noise and drag"};
  app.require_subcommand(1);

  std::string config;
  std::string out;

  auto* simulate = app.add_subcommand("simulate", "Monte Carlo batch on the simulated scenario");
  int runs = 100;
  std::uint64_t seed = 1;
  unsigned threads = 0;
  simulate->add_option("--config", config, "configuration file")->required()->check(CLI::ExistingFile);
  simulate->add_option("--runs", runs, "number of runs")->check(CLI::PositiveNumber);
  simulate->add_option("--seed", seed, "seed of the first run");
  simulate->add_option("--out", out, "output directory")->required();
  simulate->add_option("--threads", threads, "worker threads, 0 for all cores");

  auto* replay = app.add_subcommand("replay", "Run the estimator over a recorded sensor log");
  std::string log;
  std::optional<std::string> truth;
  replay->add_option("--config", config, "configuration file")->required()->check(CLI::ExistingFile);
  replay->add_option("--log", log, "sensor CSV")->required()->check(CLI::ExistingFile);
  replay->add_option("--truth", truth, "ground truth CSV")->check(CLI::ExistingFile);
  replay->add_option("--out", out, "output directory")->required();

  auto* report = app.add_subcommand("report", "Tabulate summaries of run directories");
  std::vector<std::string> dirs;
  std::optional<std::string> csv;
  report->add_option("dirs", dirs, "run directories")->required()->check(CLI::ExistingDirectory);
  report->add_option("--csv", csv, "also write the table as CSV");

  auto* observability = app.add_subcommand("observability", "Observability rank at a position");
  std::vector<double> pos;
  observability->add_option("--config", config, "configuration file")->required()->check(CLI::ExistingFile);
  observability->add_option("--pos", pos, "position x,y,z")->required()->expected(3)->delimiter(',');

  CLI11_PARSE(app, argc, argv);

  using namespace raswe::cli;
  if (*simulate) return cmd_simulate(config, runs, seed, out, std::cerr, threads);
  if (*replay) {
    std::optional<fs::path> t;
    if (truth) t = *truth;
    return cmd_replay(config, log, t, out, std::cerr);
  }
  if (*report) {
    std::vector<fs::path> paths(dirs.begin(), dirs.end());
    std::optional<fs::path> c;
    if (csv) c = *csv;
    return cmd_report(paths, std::cout, std::cerr, c);
  }
  return cmd_observability(config, raswe::Vec3(pos[0], pos[1], pos[2]), std::cout, std::cerr);
}
