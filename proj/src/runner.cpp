#include "percolil/runner.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <limits>
#include <numbers>
#include <sstream>

namespace percolil {

namespace {

template <typename Config, typename Visitor>
void visit_fields(Config& c, Visitor&& v) {
  v("experiment", c.experiment);
  v("d", c.d);
  v("L", c.L);
  v("boundary", c.boundary);
  v("p", c.p);
  v("max_attempts", c.max_attempts);
  v("conditioned", c.conditioned);
  v("bonds", c.bonds);
  v("walk", c.walk);
  v("steps", c.steps);
  v("tmax", c.tmax);
  v("trials", c.trials);
  v("q", c.q);
  v("t0", c.t0);
  v("horizon", c.horizon);
  v("checkpoint_q", c.checkpoint_q);
  v("gamma", c.gamma);
  v("kappa", c.kappa);
  v("t", c.t);
  v("n", c.n);
  v("gammas", c.gammas);
  v("radii", c.radii);
  v("min_hits", c.min_hits);
  v("seed", c.seed);
  v("threads", c.threads);
  v("out", c.out);
  v("format", c.format);
}

bool is_one_of(const std::string& value, std::initializer_list<const char*> choices) {
  for (const char* c : choices)
    if (value == c) return true;
  return false;
}

std::string fmt(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

nlohmann::json point_json(const Point& x) {
  nlohmann::json a = nlohmann::json::array();
  for (Eigen::Index i = 0; i < x.size(); ++i) a.push_back(x[i]);
  return a;
}

int ceil_sqrt_scaled(double factor, double value) {
  return static_cast<int>(std::ceil(factor * std::sqrt(value)));
}

}  // namespace

// ---------------------------------------------------------------------------
// configuration

void RunConfig::validate() const {
  const auto& names = experiment_names();
  if (std::find(names.begin(), names.end(), experiment) == names.end())
    throw ConfigError("experiment", "unknown experiment '" + experiment + "'");
  if (d < 2 || d > kMaxDim) throw ConfigError("d", "must lie in [2, " + std::to_string(kMaxDim) + "]");
  if (L < 0) throw ConfigError("L", "must be >= 0 (0 picks a default)");
  if (!is_one_of(boundary, {"free", "torus"})) throw ConfigError("boundary", "must be free or torus");
  if (!(p > 0.0 && p <= 1.0)) throw ConfigError("p", "must lie in (0, 1]");
  if (max_attempts < 1) throw ConfigError("max_attempts", "must be >= 1");
  if (!is_one_of(walk, {"ctsrw", "blind", "myopic"}))
    throw ConfigError("walk", "must be ctsrw, blind or myopic");
  if (steps < 1) throw ConfigError("steps", "must be >= 1");
  if (experiment == "alpha" && steps < 1000) throw ConfigError("steps", "alpha needs >= 1000 jumps");
  if (!(tmax >= 0.0)) throw ConfigError("tmax", "must be >= 0");
  if (trials < 1) throw ConfigError("trials", "must be >= 1");
  if (!(q > 1.0)) throw ConfigError("q", "must be > 1");
  if (!(t0 > std::numbers::e)) throw ConfigError("t0", "must exceed e");
  if (std::floor(t0) <= std::numbers::e && walk != "ctsrw")
    throw ConfigError("t0", "discrete walks need floor(t0) > e");
  if (!(horizon >= t0) || !std::isfinite(horizon)) throw ConfigError("horizon", "must be finite and >= t0");
  if (!(checkpoint_q == 0.0 || checkpoint_q > 1.0)) throw ConfigError("checkpoint_q", "must be 0 or > 1");
  if (!(gamma > 0.0)) throw ConfigError("gamma", "must be > 0");
  if (!(kappa > 1.0)) throw ConfigError("kappa", "must be > 1");
  if (t < 1) throw ConfigError("t", "must be >= 1");
  if (!(n > std::numbers::e) || !std::isfinite(n)) throw ConfigError("n", "must be finite and exceed e");
  if (gammas.empty()) throw ConfigError("gammas", "must not be empty");
  for (std::size_t i = 0; i < gammas.size(); ++i)
    if (gammas[i] < 0.0 || (i > 0 && !(gammas[i] > gammas[i - 1])))
      throw ConfigError("gammas", "must be nonnegative and strictly increasing");
  if (radii.size() != 2 || radii[0] < 0 || radii[1] < radii[0])
    throw ConfigError("radii", "must be a range a..b with 0 <= a <= b");
  if (min_hits < 1) throw ConfigError("min_hits", "must be >= 1");
  if (threads < 0) throw ConfigError("threads", "must be >= 0");
  if (!is_one_of(format, {"json", "csv"})) throw ConfigError("format", "must be json or csv");
  if (format == "csv" && is_one_of(experiment, {"generate", "alpha"}))
    throw ConfigError("format", experiment + " only produces json");
  if (experiment == "generate" && out.empty()) throw ConfigError("out", "generate needs an output path");
  if (bonds.empty()) {
    try {
      lattice_spec().validate();
    } catch (const std::exception& e) {
      throw ConfigError("L", e.what());
    }
  }
}

int RunConfig::resolved_L() const {
  if (L > 0) return L;
  if (experiment == "lil") return ceil_sqrt_scaled(4.0, horizon);
  if (experiment == "heatkernel") return std::max(8, ceil_sqrt_scaled(4.0, static_cast<double>(t)));
  if (experiment == "tail") return std::max(8, ceil_sqrt_scaled(4.0, n));
  if (experiment == "volume") return std::max(16, 2 * radii.back());
  if (experiment == "alpha") return 256;
  return 64;
}

LatticeSpec RunConfig::lattice_spec() const {
  LatticeSpec spec;
  spec.d = d;
  spec.half_width = resolved_L();
  spec.boundary = parse_boundary(boundary);
  return spec;
}

nlohmann::json config_to_json(const RunConfig& config) {
  nlohmann::json j = nlohmann::json::object();
  visit_fields(config, [&](const char* key, const auto& value) { j[key] = value; });
  j.erase("threads");
  return j;
}

void apply_config_json(RunConfig& config, const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config", "expected a JSON object");
  const nlohmann::json& src = j.contains("config") && j["config"].is_object() ? j["config"] : j;
  for (const auto& [key, value] : src.items()) {
    bool found = false;
    visit_fields(config, [&](const char* name, auto& field) {
      if (found || key != name) return;
      found = true;
      try {
        field = value.get<std::decay_t<decltype(field)>>();
      } catch (const nlohmann::json::exception&) {
        throw ConfigError(key, "wrong type " + std::string(value.type_name()));
      }
    });
    if (!found) throw ConfigError(key, "unknown key");
  }
}

RunConfig parse_config(const std::vector<std::string>& args) {
  if (args.empty()) throw ConfigError("experiment", "missing subcommand");
  const std::string& sub = args[0];
  const auto& names = experiment_names();
  if (std::find(names.begin(), names.end(), sub) == names.end())
    throw ConfigError("experiment", "unknown experiment '" + sub + "'");

  CLI::App app{std::string(kToolName) + " " + sub};
  app.name(std::string(kToolName) + " " + sub);
  RunConfig flags;
  std::string config_path;
  std::string radii_text;
  app.add_option("--config", config_path, "JSON config file (flags override it)");

  std::vector<std::pair<CLI::Option*, std::function<void(RunConfig&, const RunConfig&)>>> bound;
  auto bind = [&](const std::string& names_spec, auto member, const std::string& help) {
    CLI::Option* opt = app.add_option(names_spec, flags.*member, help);
    bound.emplace_back(opt, [member](RunConfig& dst, const RunConfig& src) { dst.*member = src.*member; });
    return opt;
  };
  bind("--d", &RunConfig::d, "dimension");
  bind("--l,--L", &RunConfig::L, "box half-width (0: auto)");
  bind("--boundary", &RunConfig::boundary, "free or torus");
  bind("--p", &RunConfig::p, "bond probability");
  bind("--max-attempts", &RunConfig::max_attempts, "conditioning attempts");
  bind("--bonds", &RunConfig::bonds, "bond file to load");
  bind("--walk,--mode", &RunConfig::walk, "ctsrw, blind or myopic");
  bind("--steps", &RunConfig::steps, "jump or step count");
  bind("--tmax", &RunConfig::tmax, "ctsrw time horizon for walk");
  bind("--trials", &RunConfig::trials, "independent walk trials");
  bind("--q", &RunConfig::q, "checkpoint ratio");
  bind("--t0", &RunConfig::t0, "first checkpoint");
  bind("--horizon", &RunConfig::horizon, "last checkpoint time");
  bind("--checkpoint-q", &RunConfig::checkpoint_q, "walk: checkpoint ratio for CSV output");
  bind("--gamma", &RunConfig::gamma, "increment threshold factor");
  bind("--kappa", &RunConfig::kappa, "annulus ratio");
  bind("--t", &RunConfig::t, "heat-kernel jump count");
  bind("--n", &RunConfig::n, "tail time horizon");
  bind("--gammas", &RunConfig::gammas, "tail grid, comma separated")->delimiter(',');
  bind("--min-hits", &RunConfig::min_hits, "minimum hits per fit bin");
  bind("--seed", &RunConfig::seed, "master seed");
  bind("--threads", &RunConfig::threads, "worker threads (0: auto)");
  bind("--out", &RunConfig::out, "output path");
  bind("--format", &RunConfig::format, "json or csv");
  CLI::Option* conditioned = app.add_flag("--conditioned", flags.conditioned, "generate: condition on origin in the largest cluster");
  CLI::Option* radii = app.add_option("--radii", radii_text, "volume radii a..b");

  std::vector<std::string> rest(args.rbegin(), args.rend() - 1);
  try {
    app.parse(rest);
  } catch (const CLI::CallForHelp&) {
    throw HelpRequested(app.help());
  }

  RunConfig config;
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) throw ConfigError("config", "cannot open " + config_path);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("config", e.what());
    }
    apply_config_json(config, j);
    if (config.experiment != sub)
      throw ConfigError("experiment", "config file is for '" + config.experiment + "', not '" + sub + "'");
  }
  for (const auto& [opt, copy] : bound)
    if (opt->count() > 0) copy(config, flags);
  if (conditioned->count() > 0) config.conditioned = flags.conditioned;
  if (radii->count() > 0) {
    const auto dots = radii_text.find("..");
    if (dots == std::string::npos) throw ConfigError("radii", "expected a..b");
    try {
      std::size_t used_a = 0, used_b = 0;
      const std::string a = radii_text.substr(0, dots), b = radii_text.substr(dots + 2);
      config.radii = {std::stoi(a, &used_a), std::stoi(b, &used_b)};
      if (used_a != a.size() || used_b != b.size()) throw std::invalid_argument("trailing text");
    } catch (const std::logic_error&) {
      throw ConfigError("radii", "expected integers a..b");
    }
  }
  config.experiment = sub;
  config.validate();
  return config;
}

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("PERCOLIL_THREADS")) {
    int value = 0;
    const std::string_view text(env);
    const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
    if (res.ec == std::errc() && res.ptr == text.data() + text.size() && value > 0) return value;
  }
  return std::max(1, static_cast<int>(std::thread::hardware_concurrency()));
}

// ---------------------------------------------------------------------------
// experiments

namespace {

struct Environment {
  std::shared_ptr<const BondConfiguration> bonds;
  ClusterView cluster;
  int attempts = 0;
};

Environment make_environment(const RunConfig& config, std::uint64_t index = 0) {
  if (!config.bonds.empty()) {
    auto bonds = std::make_shared<const BondConfiguration>(load_bonds(config.bonds));
    const SiteIndex origin = bonds->lattice().origin();
    auto cluster = ClusterView::containing(bonds, origin);
    return {std::move(bonds), std::move(cluster), 0};
  }
  auto sample = sample_conditioned(config.lattice_spec(), config.p,
                                   derive_key(config.seed, StreamTag::environment, index), config.max_attempts);
  return {std::move(sample.bonds), std::move(sample.cluster), sample.attempts};
}

/// Config with automatic values filled in, as echoed in every output.
RunConfig resolved_config(const RunConfig& config, const Environment* env) {
  RunConfig r = config;
  if (env) {
    const auto& spec = env->bonds->spec();
    r.d = spec.d;
    r.L = spec.half_width;
    r.boundary = std::string(to_string(spec.boundary));
    r.p = env->bonds->p();
  } else {
    r.L = config.resolved_L();
  }
  if (r.experiment == "walk" && r.walk == "ctsrw" && r.tmax == 0.0) r.tmax = static_cast<double>(r.steps);
  return r;
}

nlohmann::json header(const RunConfig& resolved, const Environment* env) {
  nlohmann::json j;
  j["tool"] = kToolName;
  j["version"] = kToolVersion;
  j["experiment"] = resolved.experiment;
  j["config"] = config_to_json(resolved);
  nlohmann::json warnings = nlohmann::json::array();
  if (likely_subcritical(resolved.d, resolved.p))
    warnings.push_back("p = " + fmt(resolved.p) + " is at or below the critical threshold in d = " +
                       std::to_string(resolved.d) + "; the infinite cluster does not exist there");
  j["warnings"] = warnings;
  if (env) {
    j["environment"] = {{"cluster_size", env->cluster.size()},
                        {"attempts", env->attempts},
                        {"open_edges", env->bonds->open_edge_count()},
                        {"edges", env->bonds->edge_count()},
                        {"bond_seed", env->bonds->seed()}};
  }
  return j;
}

void append_checkpoint_rows(std::string& csv, std::uint64_t trial, const CheckpointSeries& series) {
  for (const auto& c : series.points) {
    csv += std::to_string(trial) + ',' + std::to_string(c.k) + ',' + fmt(c.t) + ',' + std::to_string(c.l1) +
           ',' + fmt(c.phi) + ',' + fmt(c.ratio) + ',' + fmt(c.runmax) + '\n';
  }
}

RunOutput run_generate(const RunConfig& config) {
  RunOutput out;
  const LatticeSpec spec = config.lattice_spec();
  int attempts = 0;
  std::shared_ptr<const BondConfiguration> bonds;
  if (config.conditioned) {
    auto sample = sample_conditioned(spec, config.p, derive_key(config.seed, StreamTag::environment, 0),
                                     config.max_attempts);
    bonds = std::move(sample.bonds);
    attempts = sample.attempts;
  } else {
    bonds = std::make_shared<const BondConfiguration>(generate_bonds(spec, config.p, config.seed));
  }
  const auto cluster = ClusterView::containing(bonds, bonds->lattice().origin());
  out.summary = header(resolved_config(config, nullptr), nullptr);
  out.summary["bonds"] = {{"d", spec.d},
                          {"L", spec.half_width},
                          {"p", config.p},
                          {"seed", bonds->seed()},
                          {"boundary", std::string(to_string(spec.boundary))},
                          {"edges", bonds->edge_count()},
                          {"open_edges", bonds->open_edge_count()},
                          {"origin_cluster_size", cluster.size()},
                          {"attempts", attempts},
                          {"path", config.out}};
  out.bonds = std::move(bonds);
  return out;
}

RunOutput run_walk(const RunConfig& config, int threads) {
  const Environment env = make_environment(config);
  const RunConfig resolved = resolved_config(config, &env);
  const WalkKind kind = parse_walk_kind(config.walk);
  const int d = env.cluster.d();
  const SiteIndex origin = env.cluster.origin();
  const bool checkpoints = config.checkpoint_q > 1.0;

  struct Payload {
    std::string rows;
    nlohmann::json summary;
    bool censored = false;
  };
  auto results = run_trials<Payload>(config.trials, threads, config.seed, [&](std::uint64_t i, std::uint64_t seed) {
    double t_h = 0.0;
    std::uint64_t u_h = 0, p_min = 0;
    if (kind == WalkKind::ctsrw) t_h = resolved.tmax;
    else if (kind == WalkKind::blind) u_h = config.steps;
    else p_min = config.steps;
    const CoupledTrajectory traj = run_coupled_until(env.cluster, origin, seed, t_h, u_h, p_min);
    Payload payload;
    payload.censored = traj.boundary_hit();
    Point end;
    if (kind == WalkKind::ctsrw) end = x_at(traj, t_h);
    else if (kind == WalkKind::blind) end = y_at(traj, u_h);
    else end = traj.z(p_min);
    payload.summary = {{"trial", i},
                       {"seed", seed},
                       {"jumps", traj.jumps()},
                       {"time", traj.t_cum.back()},
                       {"blind_time", traj.u_cum.back()},
                       {"end", point_json(end)},
                       {"censored", payload.censored}};
    if (checkpoints) {
      const double h = kind == WalkKind::ctsrw ? t_h : static_cast<double>(config.steps);
      if (h >= config.t0) {
        const auto series = track_checkpoints(traj, kind, config.checkpoint_q, config.t0, h);
        append_checkpoint_rows(payload.rows, i, series);
      }
    } else {
      for (std::uint64_t p = 0; p <= traj.jumps(); ++p) {
        payload.rows += std::to_string(i) + ',' + std::to_string(p);
        const auto col = traj.path.col(static_cast<Eigen::Index>(p));
        for (int a = 0; a < d; ++a) payload.rows += ',' + std::to_string(col[a]);
        payload.rows += ',' + fmt(traj.t_cum[p]) + ',' + std::to_string(traj.u_cum[p]) + '\n';
      }
    }
    return payload;
  });

  RunOutput out;
  out.summary = header(resolved, &env);
  if (checkpoints) {
    out.csv = std::string(kCheckpointCsvHeader) + '\n';
  } else {
    out.csv = "trial,p";
    for (int a = 1; a <= d; ++a) out.csv += ",x" + std::to_string(a);
    out.csv += ",t_cum,u_cum\n";
  }
  nlohmann::json per_trial = nlohmann::json::array();
  std::size_t censored = 0, completed = 0;
  for (const auto& r : results) {
    if (!r.payload) {
      per_trial.push_back({{"trial", r.index}, {"error", r.error}});
      continue;
    }
    ++completed;
    censored += r.payload->censored ? 1 : 0;
    out.csv += r.payload->rows;
    per_trial.push_back(r.payload->summary);
  }
  out.summary["trials"] = per_trial;
  out.summary["censoring_rate"] = completed ? static_cast<double>(censored) / completed : 0.0;
  return out;
}

RunOutput run_lil(const RunConfig& config, int threads) {
  const Environment env = make_environment(config);
  const RunConfig resolved = resolved_config(config, &env);
  const SiteIndex origin = env.cluster.origin();
  const double H = config.horizon;

  struct Payload {
    std::array<CheckpointSeries, 3> series;
    EnvironmentStats stats;
    std::uint64_t jumps = 0, blind_time = 0;
    double time = 0.0;
  };
  auto results = run_trials<Payload>(config.trials, threads, config.seed, [&](std::uint64_t, std::uint64_t seed) {
    CoupledWalker walker(env.cluster, origin, seed);
    const Point start = walker.cursor().position();
    std::array<CheckpointProbe, 3> probes = {CheckpointProbe(WalkKind::ctsrw, config.q, config.t0, H, start),
                                             CheckpointProbe(WalkKind::blind, config.q, config.t0, H, start),
                                             CheckpointProbe(WalkKind::myopic, config.q, config.t0, H, start)};
    Payload payload;
    payload.stats = EnvironmentStats(env.cluster.d());
    const auto horizon_all = std::numeric_limits<std::uint64_t>::max() - 1;
    auto all_done = [&] { return probes[0].done() && probes[1].done() && probes[2].done(); };
    while (!all_done()) {
      const Point position = walker.cursor().position();
      const bool censored = walker.censor_jump().has_value();
      const auto hold = walker.jump();
      for (auto& probe : probes) probe.observe(hold, position, censored);
      payload.stats.add_hold(hold.degree, hold.u_begin, hold.u_end, horizon_all);
    }
    for (std::size_t w = 0; w < 3; ++w) payload.series[w] = probes[w].series();
    payload.jumps = walker.jumps();
    payload.blind_time = walker.blind_time();
    payload.time = walker.time();
    return payload;
  });

  RunOutput out;
  out.summary = header(resolved, &env);
  std::array<std::vector<CheckpointSeries>, 3> series;
  EnvironmentStats pooled(env.cluster.d());
  std::uint64_t jumps = 0, blind_time = 0;
  const WalkKind csv_kind = parse_walk_kind(config.walk);
  out.csv = std::string(kCheckpointCsvHeader) + '\n';
  for (const auto& r : results) {
    if (!r.payload) continue;
    for (std::size_t w = 0; w < 3; ++w) series[w].push_back(r.payload->series[w]);
    pooled += r.payload->stats;
    jumps += r.payload->jumps;
    blind_time += r.payload->blind_time;
    append_checkpoint_rows(out.csv, r.index, r.payload->series[static_cast<std::size_t>(csv_kind)]);
  }

  std::vector<double> grid;
  for (double h : {1e4, 1e5, 1e6, 4e6})
    if (h >= config.t0 && h < H) grid.push_back(h);
  grid.push_back(H);

  const std::array<WalkKind, 3> kinds = {WalkKind::ctsrw, WalkKind::blind, WalkKind::myopic};
  nlohmann::json walks = nlohmann::json::object();
  std::array<std::optional<double>, 3> at_horizon;
  for (std::size_t w = 0; w < 3; ++w) {
    nlohmann::json estimates = nlohmann::json::array();
    for (double h : grid) {
      try {
        const auto est = estimate_lil_constant(series[w], h);
        estimates.push_back({{"horizon", h},
                             {"median", est.median},
                             {"mean", est.mean},
                             {"band_low", est.band_low},
                             {"band_high", est.band_high},
                             {"trials", est.trials},
                             {"censored", est.censored},
                             {"censoring_rate", est.censoring_rate}});
        if (h == H) at_horizon[w] = est.median;
      } catch (const std::exception& e) {
        estimates.push_back({{"horizon", h}, {"error", e.what()}});
      }
    }
    walks[std::string(to_string(kinds[w]))] = estimates;
  }
  out.summary["walks"] = walks;

  std::size_t censored = 0;
  for (const auto& s : series[0]) censored += s.censored ? 1 : 0;
  out.summary["censoring_rate"] = series[0].empty() ? 0.0 : static_cast<double>(censored) / series[0].size();

  const double alpha = blind_time ? static_cast<double>(jumps) / static_cast<double>(blind_time) : 0.0;
  out.summary["alpha_direct"] = alpha;
  try {
    out.summary["alpha_from_ik"] = alpha_from_ik(pooled);
  } catch (const std::exception&) {
    out.summary["alpha_from_ik"] = nullptr;
  }
  if (at_horizon[0] && at_horizon[1] && *at_horizon[1] > 0.0 && alpha > 0.0) {
    const double ratio = *at_horizon[0] / *at_horizon[1];
    const double predicted = 1.0 / std::sqrt(alpha);
    out.summary["cross_walk"] = {
        {"ratio_ctsrw_over_blind", ratio},
        {"predicted", predicted},
        {"relative_error", std::abs(ratio / predicted - 1.0)},
        {"note", "finite-horizon medians carry O(1/log log t) bias and Monte Carlo error; the ratio is only "
                 "expected to approach the prediction slowly"}};
  } else {
    out.summary["cross_walk"] = nullptr;
  }
  return out;
}

RunOutput run_heatkernel(const RunConfig& config, int threads) {
  const Environment env = make_environment(config);
  const RunConfig resolved = resolved_config(config, &env);
  const SiteIndex origin = env.cluster.origin();

  auto results = run_trials<SiteIndex>(config.trials, threads, config.seed, [&](std::uint64_t i, std::uint64_t) {
    const auto h = simulate_myopic_endpoints(env.cluster, origin, config.t, i, i + 1, config.seed);
    return h.hits.begin()->first;
  });
  EndpointHistogram histogram;
  histogram.jumps = config.t;
  for (const auto& r : results) {
    if (!r.payload) continue;
    ++histogram.hits[*r.payload];
    ++histogram.trials;
  }

  RunOutput out;
  out.summary = header(resolved, &env);
  out.summary["t"] = config.t;
  out.summary["samples"] = histogram.trials;
  HeatKernelBinning binning;
  binning.min_hits = config.min_hits;
  const auto bins = heat_kernel_bins(histogram, env.cluster, origin, binning);
  nlohmann::json bins_json = nlohmann::json::array();
  for (const auto& b : bins) bins_json.push_back({{"x", b.x}, {"value", b.value}, {"hits", b.hits}});
  out.summary["bins"] = bins_json;
  try {
    const auto fit = gaussian_fit(bins, config.min_hits);
    out.summary["fit"] = {{"slope", fit.slope},
                          {"intercept", fit.intercept},
                          {"r_squared", fit.r_squared},
                          {"points", fit.points}};
  } catch (const std::exception& e) {
    out.summary["fit"] = nullptr;
    out.summary["fit_error"] = e.what();
  }
  out.summary["censoring_rate"] = 0.0;

  const Lattice& lat = env.cluster.lattice();
  const Point start = lat.point(origin);
  out.csv = "site";
  for (int a = 1; a <= lat.d(); ++a) out.csv += ",x" + std::to_string(a);
  out.csv += ",l1,degree,hits,probability\n";
  for (const auto& [site, hits] : histogram.hits) {
    const Point y = lat.point(site);
    out.csv += std::to_string(site);
    for (int a = 0; a < lat.d(); ++a) out.csv += ',' + std::to_string(y[a]);
    out.csv += ',' + std::to_string(l1_norm(lat, y, start)) + ',' + std::to_string(env.cluster.open_degree(site)) +
               ',' + std::to_string(hits) + ',' +
               fmt(static_cast<double>(hits) / static_cast<double>(histogram.trials)) + '\n';
  }
  return out;
}

RunOutput run_alpha(const RunConfig& config, int threads) {
  const Environment env = make_environment(config);
  const RunConfig resolved = resolved_config(config, &env);
  const SiteIndex origin = env.cluster.origin();
  const bool torus = env.cluster.lattice().torus();

  struct Payload {
    EnvironmentStats stats;
    std::uint64_t blind_time = 0;
    bool censored = false;
  };
  auto results = run_trials<Payload>(config.trials, threads, config.seed, [&](std::uint64_t, std::uint64_t seed) {
    CoupledWalker walker(env.cluster, origin, seed);
    Payload payload;
    payload.stats = EnvironmentStats(env.cluster.d());
    while (walker.jumps() < config.steps) {
      const auto hold = walker.jump();
      payload.stats.add_hold(hold.degree, hold.u_begin, hold.u_end, std::numeric_limits<std::uint64_t>::max() - 1);
    }
    payload.blind_time = walker.blind_time();
    payload.censored = walker.censor_jump().has_value();
    return payload;
  });

  RunOutput out;
  out.summary = header(resolved, &env);
  EnvironmentStats pooled(env.cluster.d());
  nlohmann::json per_trial = nlohmann::json::array();
  double sum = 0.0;
  std::size_t used = 0, censored = 0, completed = 0;
  for (const auto& r : results) {
    if (!r.payload) {
      per_trial.push_back({{"trial", r.index}, {"error", r.error}});
      continue;
    }
    ++completed;
    const auto& pl = *r.payload;
    const double a = static_cast<double>(config.steps) / static_cast<double>(pl.blind_time);
    nlohmann::json entry = {{"trial", r.index}, {"alpha_direct", a}, {"censored", pl.censored}};
    try {
      entry["alpha_from_ik"] = alpha_from_ik(pl.stats);
    } catch (const std::exception&) {
      entry["alpha_from_ik"] = nullptr;
    }
    per_trial.push_back(entry);
    censored += pl.censored ? 1 : 0;
    // On a torus the walk never leaves the environment, so contact with the
    // box scale does not bias the time change.
    if (pl.censored && !torus) continue;
    sum += a;
    pooled += pl.stats;
    ++used;
  }
  if (used == 0) throw std::runtime_error("every alpha trial was censored; enlarge the box");
  out.summary["alpha_direct"] = sum / static_cast<double>(used);
  out.summary["alpha_from_ik"] = alpha_from_ik(pooled);
  nlohmann::json ik = nlohmann::json::array();
  nlohmann::json it = nlohmann::json::array();
  for (int k = 0; k <= 2 * pooled.d; ++k) {
    ik.push_back(pooled.i_hat(k));
    it.push_back(pooled.i_time(k));
  }
  out.summary["i_hat"] = ik;
  out.summary["i_time"] = it;
  out.summary["trials_used"] = used;
  out.summary["censoring_rate"] = completed ? static_cast<double>(censored) / completed : 0.0;
  out.summary["trials"] = per_trial;
  return out;
}

RunOutput run_volume(const RunConfig& config, int threads) {
  const bool from_file = !config.bonds.empty();
  const std::uint64_t count = from_file ? 1 : config.trials;
  auto results = run_trials<ClusterView>(count, threads, config.seed, [&](std::uint64_t i, std::uint64_t) {
    return make_environment(config, i).cluster;
  });
  std::vector<ClusterView> clusters;
  for (auto& r : results)
    if (r.payload) clusters.push_back(std::move(*r.payload));
  const Environment first{clusters.front().bonds_ptr(), clusters.front(), 0};
  const RunConfig resolved = resolved_config(config, &first);

  const int L = clusters.front().lattice().half_width();
  const int a = config.radii[0];
  const int b = std::min(config.radii[1], L - 1);
  if (b < a) throw std::invalid_argument("radii lie beyond the box; raise L");
  std::vector<double> mean(static_cast<std::size_t>(b - a + 1), 0.0);
  for (const auto& c : clusters) {
    const auto vols = ball_volumes(c, c.origin(), b);
    for (int r = a; r <= b; ++r) mean[static_cast<std::size_t>(r - a)] += static_cast<double>(vols[static_cast<std::size_t>(r)]);
  }
  for (double& v : mean) v /= static_cast<double>(clusters.size());

  RunOutput out;
  out.summary = header(resolved, &first);
  out.summary["clusters"] = clusters.size();
  out.csv = "n,vol\n";
  nlohmann::json table = nlohmann::json::array();
  for (int r = a; r <= b; ++r) {
    const double v = mean[static_cast<std::size_t>(r - a)];
    out.csv += std::to_string(r) + ',' + fmt(v) + '\n';
    table.push_back({{"n", r}, {"vol", v}});
  }
  out.summary["volumes"] = table;
  try {
    const auto fit = volume_growth_fit(clusters, std::max(a, 10), b);
    out.summary["fit"] = {{"exponent", fit.slope},
                          {"log_constant", fit.intercept},
                          {"r_squared", fit.r_squared},
                          {"points", fit.points}};
  } catch (const std::exception& e) {
    out.summary["fit"] = nullptr;
    out.summary["fit_error"] = e.what();
  }
  out.summary["censoring_rate"] = 0.0;
  return out;
}

RunOutput run_tail(const RunConfig& config, int threads) {
  const Environment env = make_environment(config);
  const RunConfig resolved = resolved_config(config, &env);
  const SiteIndex origin = env.cluster.origin();
  const int cap = static_cast<int>(std::min<std::uint64_t>(env.cluster.size(), std::numeric_limits<int>::max()));
  const DistanceField field = distance_field(env.cluster.bonds(), origin, std::max(cap, 1));

  struct Payload {
    int max = 0;
    bool censored = false;
  };
  auto results = run_trials<Payload>(config.trials, threads, config.seed, [&](std::uint64_t, std::uint64_t seed) {
    Payload payload;
    payload.max = max_displacement_until(env.cluster, field, config.n, seed, payload.censored);
    return payload;
  });
  std::vector<int> maxima;
  std::size_t censored = 0;
  for (const auto& r : results) {
    if (!r.payload) continue;
    if (r.payload->censored) ++censored;
    else maxima.push_back(r.payload->max);
  }
  const auto curve = tail_curve(maxima, config.n, config.gammas, censored);

  RunOutput out;
  out.summary = header(resolved, &env);
  out.summary["n"] = config.n;
  out.summary["phi_n"] = phi(config.n);
  out.summary["gammas"] = curve.gammas;
  out.summary["survival"] = curve.survival;
  out.summary["trials_used"] = curve.trials;
  out.summary["censored"] = curve.censored;
  out.summary["censoring_rate"] =
      static_cast<double>(curve.censored) / static_cast<double>(curve.censored + curve.trials);
  std::vector<double> gx, gy;
  for (std::size_t i = 0; i < curve.gammas.size(); ++i) {
    if (curve.survival[i] > 0.0 && curve.gammas[i] > 0.0) {
      gx.push_back(curve.gammas[i] * curve.gammas[i]);
      gy.push_back(std::log(curve.survival[i]));
    }
  }
  if (gx.size() >= 2) {
    const auto fit = fit_line(Eigen::Map<const Eigen::VectorXd>(gx.data(), static_cast<Eigen::Index>(gx.size())),
                              Eigen::Map<const Eigen::VectorXd>(gy.data(), static_cast<Eigen::Index>(gy.size())));
    out.summary["log_survival_vs_gamma_squared"] = {
        {"slope", fit.slope}, {"intercept", fit.intercept}, {"r_squared", fit.r_squared}, {"points", fit.points}};
  } else {
    out.summary["log_survival_vs_gamma_squared"] = nullptr;
  }
  out.csv = "gamma,survival\n";
  for (std::size_t i = 0; i < curve.gammas.size(); ++i)
    out.csv += fmt(curve.gammas[i]) + ',' + fmt(curve.survival[i]) + '\n';
  return out;
}

}  // namespace

RunOutput run_batch(const RunConfig& config) {
  config.validate();
  const int threads = resolve_threads(config.threads);
  if (config.experiment == "generate") return run_generate(config);
  if (config.experiment == "walk") return run_walk(config, threads);
  if (config.experiment == "lil") return run_lil(config, threads);
  if (config.experiment == "heatkernel") return run_heatkernel(config, threads);
  if (config.experiment == "alpha") return run_alpha(config, threads);
  if (config.experiment == "volume") return run_volume(config, threads);
  return run_tail(config, threads);
}

std::string render(const RunOutput& output, const RunConfig& config) {
  if (config.format == "csv" && !output.bonds) return output.csv;
  return output.summary.dump(2) + '\n';
}

void emit(const RunOutput& output, const RunConfig& config) {
  const std::string text = render(output, config);
  if (output.bonds) {
    save_bonds(config.out, *output.bonds);
    std::cout << text;
    return;
  }
  if (config.out.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream file(config.out, std::ios::binary);
  if (!file) throw std::runtime_error("cannot write " + config.out);
  file << text;
  if (!file) throw std::runtime_error("write failed for " + config.out);
}

}  // namespace percolil
