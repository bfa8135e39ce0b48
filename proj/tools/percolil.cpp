// Command-line front end: percolil <experiment> [flags].
#include "percolil/runner.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <iostream>
#include <string>
#include <vector>

namespace {

void usage(std::ostream& os) {
  os << "usage: percolil <experiment> [--flag value ...] [--config file.json]\n"
        "experiments:";
  for (const auto& name : percolil::experiment_names()) os << ' ' << name;
  os << "\nrun 'percolil <experiment> --help' for the flags\n";
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  if (args.empty() || args[0] == "--help" || args[0] == "-h") {
    usage(args.empty() ? std::cerr : std::cout);
    return args.empty() ? 1 : 0;
  }
  if (args[0] == "--version") {
    std::cout << percolil::kToolName << ' ' << percolil::kToolVersion << '\n';
    return 0;
  }
  percolil::RunConfig config;
  try {
    config = percolil::parse_config(args);
  } catch (const percolil::HelpRequested& help) {
    std::cout << help.what();
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << "percolil: " << e.what() << '\n';
    return 1;
  } catch (const percolil::ConfigError& e) {
    std::cerr << "percolil: invalid " << e.what() << '\n';
    return 1;
  }

  const double pc = percolil::critical_probability(config.d);
  if (!std::isnan(pc) && config.bonds.empty() && config.p <= pc)
    std::cerr << "percolil: warning: p = " << config.p << " is at or below p_c ~ " << pc
              << "; no infinite cluster, conditioning will rarely succeed\n";

  try {
    const auto output = percolil::run_batch(config);
    percolil::emit(output, config);
  } catch (const percolil::BatchFailure& e) {
    std::cerr << "percolil: batch failed: " << e.what() << '\n';
    return 3;
  } catch (const percolil::ConfigError& e) {
    std::cerr << "percolil: invalid " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "percolil: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
