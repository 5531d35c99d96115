// Command-line driver: simulate, compare, probe-approx, partition-report, recompute-demo.

#include <CLI11.hpp>
#include <iostream>

#include "lms/app.hpp"
#include "lms/error.hpp"

int main(int argc, char** argv) {
  CLI::App cli{"Lattice multislice STEM simulator"};
  cli.require_subcommand(1);
  std::string config;
  lms::app::Options opts;
  cli.add_option("--config", config, "INI configuration file");
  cli.add_option("--workers", opts.workers, "worker threads (0 = all cores)")->check(CLI::NonNegativeNumber);
  cli.add_option("--out", opts.out_dir, "output directory (overrides [output] dir)");
  cli.add_flag("--verbose", opts.verbose, "extra diagnostics");

  auto* simulate = cli.add_subcommand("simulate", "run the configured solver and write STEM images");
  auto* probe_approx = cli.add_subcommand("probe-approx", "tabulate probe fit errors over L and f");
  auto* partition = cli.add_subcommand("partition-report", "compare partition strategies and costs");
  auto* recompute = cli.add_subcommand("recompute-demo", "apply [edit], recompute locally, verify against a full run");
  auto* compare = cli.add_subcommand("compare", "relative errors between the images of two runs");
  std::string dir_a, dir_b;
  compare->add_option("first", dir_a, "run directory")->required()->check(CLI::ExistingDirectory);
  compare->add_option("second", dir_b, "reference run directory")->required()->check(CLI::ExistingDirectory);

  try {
    cli.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return cli.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (compare->parsed()) return lms::app::cmd_compare(dir_a, dir_b, std::cout);
    if (config.empty()) throw lms::app::ConfigError("--config is required for this subcommand");
    const auto cfg = lms::app::load_config(config);
    if (simulate->parsed()) return lms::app::cmd_simulate(cfg, opts, std::cout);
    if (probe_approx->parsed()) return lms::app::cmd_probe_approx(cfg, opts, std::cout);
    if (partition->parsed()) return lms::app::cmd_partition_report(cfg, opts, std::cout);
    if (recompute->parsed()) return lms::app::cmd_recompute_demo(cfg, opts, std::cout);
  } catch (const lms::app::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const lms::InvalidArgument& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return 2;
  } catch (const lms::FormatError& e) {
    std::cerr << "bad file: " << e.what() << '\n';
    return 2;
  } catch (const lms::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
