// Run configuration, the parallel trial runner and the experiment drivers
// behind the command-line tool.
#ifndef PERCOLIL_RUNNER_HPP
#define PERCOLIL_RUNNER_HPP

#include "percolil/analysis.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace percolil {

inline constexpr const char* kToolName = "percolil";
inline constexpr const char* kToolVersion = "0.1.0";

/// Every parameter of every experiment. Strings hold the enumerated choices
/// (experiment, boundary, walk, format) exactly as spelled on the command
/// line; validate() checks them.
struct RunConfig {
  std::string experiment = "lil";
  // environment
  int d = 2;
  int L = 0;  // 0 picks a size suited to the experiment
  std::string boundary = "torus";
  double p = 0.7;
  int max_attempts = 100;
  bool conditioned = false;  // generate: keep only origin-in-largest configurations
  std::string bonds;         // bond file to load instead of sampling
  // walks
  std::string walk = "ctsrw";
  std::uint64_t steps = 10000;
  double tmax = 0.0;         // ctsrw walk horizon; 0 means `steps`
  std::uint64_t trials = 50;
  double q = 2.0;
  double t0 = 16.0;
  double horizon = 1e6;
  double checkpoint_q = 0.0;  // walk: emit checkpoints on this grid when > 1
  double gamma = 0.3;
  double kappa = 3.0;
  // heat kernel / tail / volume
  std::uint64_t t = 2000;
  double n = 1e4;
  std::vector<double> gammas = {0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0, 1.1,
                                1.2, 1.3, 1.4, 1.5, 1.6, 1.7, 1.8, 1.9, 2.0};
  std::vector<int> radii = {1, 60};
  std::uint64_t min_hits = 50;
  // execution and output
  std::uint64_t seed = 1;
  int threads = 0;  // 0: PERCOLIL_THREADS, then hardware concurrency
  std::string out;  // empty: stdout
  std::string format = "json";

  /// Throws ConfigError naming the first invalid key.
  void validate() const;
  /// Box half-width actually used by the experiment.
  int resolved_L() const;
  LatticeSpec lattice_spec() const;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

class ConfigError : public std::invalid_argument {
 public:
  ConfigError(std::string key, const std::string& message)
      : std::invalid_argument(key + ": " + message), key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

/// `--help` was given; what() is the help text of the subcommand.
class HelpRequested : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when more than 10% of a batch's trials fail.
class BatchFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names = {"generate", "walk",   "lil", "heatkernel",
                                                 "alpha",    "volume", "tail"};
  return names;
}

/// Resolved config as JSON (the thread budget is an execution detail and is
/// left out so outputs do not depend on it).
nlohmann::json config_to_json(const RunConfig& config);
/// Overlay the keys of `j` onto `config`. Unknown keys or wrong types throw
/// ConfigError. An object with a "config" member (a previous output) is
/// unwrapped first.
void apply_config_json(RunConfig& config, const nlohmann::json& j);

/// args[0] is the subcommand. Precedence: flags, then `--config <file>`,
/// then defaults. Throws ConfigError on bad values or unknown keys, and
/// CLI::ParseError (from CLI11) on malformed flags, and HelpRequested for
/// `--help`.
RunConfig parse_config(const std::vector<std::string>& args);

/// Flag value, then PERCOLIL_THREADS, then hardware concurrency (>= 1).
int resolve_threads(int requested);

/// Outcome of one trial.
template <typename Payload>
struct TrialResult {
  std::uint64_t index = 0;
  std::uint64_t seed = 0;
  std::optional<Payload> payload;
  std::string error;
};

/// Runs fn(i, seed_i) for i in [0, trials) on `threads` workers, seed_i =
/// trial_seed(master_seed, i). Results come back in index order whatever the
/// scheduling. Throws BatchFailure if more than 10% of trials throw.
template <typename Payload, typename Fn>
std::vector<TrialResult<Payload>> run_trials(std::uint64_t trials, int threads, std::uint64_t master_seed,
                                             Fn&& fn) {
  std::vector<TrialResult<Payload>> results(trials);
  std::atomic<std::uint64_t> next{0};
  auto worker = [&] {
    for (std::uint64_t i = next++; i < trials; i = next++) {
      auto& r = results[i];
      r.index = i;
      r.seed = trial_seed(master_seed, i);
      try {
        r.payload.emplace(fn(i, r.seed));
      } catch (const std::exception& e) {
        r.error = e.what();
      }
    }
  };
  const auto workers = static_cast<std::uint64_t>(std::max(1, threads));
  if (workers == 1 || trials <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::uint64_t w = 0; w < std::min(workers, trials); ++w) pool.emplace_back(worker);
  }
  std::uint64_t failed = 0;
  for (const auto& r : results) failed += r.payload ? 0 : 1;
  if (failed * 10 > trials)
    throw BatchFailure(std::to_string(failed) + " of " + std::to_string(trials) +
                       " trials failed; first error: " +
                       std::find_if(results.begin(), results.end(), [](const auto& r) {
                         return !r.payload;
                       })->error);
  return results;
}

/// What an experiment produced: a JSON summary (always) and, for the
/// experiments with per-row data, the CSV table.
struct RunOutput {
  nlohmann::json summary;
  std::string csv;
  std::shared_ptr<const BondConfiguration> bonds;  // generate: written to config.out
};

inline constexpr const char* kCheckpointCsvHeader = "trial,k,t,l1,phi,ratio,runmax";

/// Runs the configured experiment.
RunOutput run_batch(const RunConfig& config);

/// Writes the summary (format json) or the table (format csv) to
/// config.out, or stdout when it is empty. For generate the bond file goes
/// to config.out and the summary to stdout. Throws std::runtime_error if the
/// path cannot be written.
void emit(const RunOutput& output, const RunConfig& config);
/// The exact bytes emit() writes.
std::string render(const RunOutput& output, const RunConfig& config);

}  // namespace percolil

#endif  // PERCOLIL_RUNNER_HPP
