#include "wfcm/commands.hpp"

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <iomanip>
#include <ostream>
#include <set>
#include <sstream>

#include "wfcm/experiments.hpp"
#include "wfcm/inference.hpp"
#include "wfcm/model_select.hpp"
#include "wfcm/parallel.hpp"
#include "wfcm/synth_sampler.hpp"

namespace wfcm {
namespace fs = std::filesystem;
namespace {

Error config_error(const std::string& field, const std::string& what) {
  return Error("config-invalid", field + ": " + what, ErrorKind::validation);
}

void check_keys(const Json& obj, const std::string& where, const std::set<std::string>& allowed) {
  if (!obj.is_object()) throw config_error(where.empty() ? "config" : where, "expected an object");
  for (const auto& [key, _] : obj.items()) {
    if (!allowed.count(key)) throw config_error(where.empty() ? key : where + "." + key, "unknown field");
  }
}

template <class T>
T get(const Json& obj, const std::string& key, const std::string& where, T fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const Json::exception&) {
    throw config_error(where.empty() ? key : where + "." + key, "has the wrong type");
  }
}

const Json& section(const Json& config, const std::string& key) {
  static const Json empty = Json::object();
  return config.contains(key) ? config.at(key) : empty;
}

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

struct Run {
  std::string command;
  const Json& config;
  fs::path out_dir;
  std::vector<std::string> outputs;
  std::string input_digest;
  bool partial = false;

  void write(const std::string& name, std::string_view text) {
    write_text(out_dir / name, text);
    outputs.push_back(name);
  }
  void write_json(const std::string& name, const Json& j) { write(name, j.dump(2) + "\n"); }
};

int threads_of(const Json& config) { return get<int>(config, "threads", "", 1); }
std::uint64_t seed_of(const Json& config) { return get<std::uint64_t>(config, "seed", "", 1); }

Dataset load_data(Run& run) {
  const auto path = get<std::string>(run.config, "data", "", "");
  if (path.empty()) throw config_error("data", "a data CSV is required");
  const std::string text = read_text(path);
  run.input_digest = sha256_hex(text);
  return parse_csv(text);
}

int k_of(const Json& config) {
  const int k = get<int>(config, "k", "", 0);
  if (k < 1) throw config_error("k", "must be provided and >= 1");
  return k;
}

ChainConfig chain_from_json(const Json& config, int n, std::uint64_t seed) {
  const Json& c = section(config, "chain");
  check_keys(c, "chain", {"iterations", "burn_in_fraction", "local_step_sd", "jump_probability", "jump_scale",
                          "thinning", "steps_per_point", "initial_point"});
  ChainConfig chain = default_chain(n, seed, get<int>(c, "steps_per_point", "chain", 1000));
  chain.iterations = get<int>(c, "iterations", "chain", chain.iterations);
  chain.burn_in_fraction = get<double>(c, "burn_in_fraction", "chain", chain.burn_in_fraction);
  chain.local_step_sd = get<double>(c, "local_step_sd", "chain", chain.local_step_sd);
  chain.jump_probability = get<double>(c, "jump_probability", "chain", chain.jump_probability);
  chain.thinning = get<int>(c, "thinning", "chain", 0);
  if (c.contains("jump_scale") && !(c.at("jump_scale").is_string() && c.at("jump_scale") == "auto")) {
    chain.jump_scale = get<double>(c, "jump_scale", "chain", 0.0);
  }
  if (c.contains("initial_point") && !(c.at("initial_point").is_string() && c.at("initial_point") == "center-mixture")) {
    const auto pt = get<std::vector<double>>(c, "initial_point", "chain", {});
    chain.initial_point = Eigen::Map<const Vector>(pt.data(), static_cast<Eigen::Index>(pt.size()));
  }
  return chain;
}

ExperimentConfig experiment_from_json(const Json& config) {
  const Json& e = section(config, "experiment");
  check_keys(e, "experiment", {"n_values", "replicates", "steps_per_point", "is_samples_per_obs", "level"});
  ExperimentConfig out;
  out.n_values = get<std::vector<int>>(e, "n_values", "experiment", {});
  out.replicates = get<int>(e, "replicates", "experiment", out.replicates);
  out.steps_per_point = get<int>(e, "steps_per_point", "experiment", out.steps_per_point);
  out.is_samples_per_obs = get<double>(e, "is_samples_per_obs", "experiment", out.is_samples_per_obs);
  out.seed = seed_of(config);
  out.threads = threads_of(config);
  out.fit = fit_config_from_json(config);
  return out;
}

ModelParams truth_of(const Json& config) {
  if (!config.contains("params")) throw config_error("params", "true parameters are required");
  check_keys(config.at("params"), "params", {"sigma", "m", "weights", "centers", "weight_floor"});
  return params_from_json(config.at("params"));
}

void cmd_simulate(Run& run) {
  const ModelParams truth = truth_of(run.config);
  const int n = get<int>(run.config, "n", "", 0);
  if (n < 1) throw config_error("n", "must be provided and >= 1");
  const ChainOutput out = mh_sample(truth, n, chain_from_json(run.config, n, seed_of(run.config)));
  run.write("data.csv", to_csv(out.samples));
  run.write_json("diagnostics.json", to_json(out.diagnostics));
}

void write_fit(Run& run, const FitResult& fit, const std::string& prefix) {
  run.write_json(prefix + "fit.json", to_json(fit));
  run.write(prefix + "memberships.csv", memberships_csv(fit.memberships));
  run.write(prefix + "trace.csv", trace_csv(fit.trace));
}

void cmd_fit(Run& run) {
  const Dataset data = load_data(run);
  const FitConfig cfg = fit_config_from_json(run.config);
  try {
    const FitResult res = fit(data, k_of(run.config), cfg);
    write_fit(run, res, "");
    if (std::find(res.flags.begin(), res.flags.end(), "m-grid-partial-failure") != res.flags.end()) run.partial = true;
  } catch (const FitDiverged& e) {
    run.write("trace.csv", trace_csv(e.trace()));
    throw;
  }
}

void cmd_bootstrap(Run& run) {
  const Dataset data = load_data(run);
  const Json& b = section(run.config, "bootstrap");
  check_keys(b, "bootstrap", {"B", "alpha", "fix_m", "warm_start"});
  BootstrapConfig bc;
  bc.replicates = get<int>(b, "B", "bootstrap", bc.replicates);
  bc.alpha = get<double>(b, "alpha", "bootstrap", bc.alpha);
  bc.fix_m = get<bool>(b, "fix_m", "bootstrap", bc.fix_m);
  bc.warm_start = get<bool>(b, "warm_start", "bootstrap", bc.warm_start);
  bc.seed = seed_of(run.config);
  bc.threads = threads_of(run.config);
  const BootstrapReport report = bootstrap(data, k_of(run.config), fit_config_from_json(run.config), bc);
  run.write_json("bootstrap.json", to_json(report));
  run.write("ci_table.csv", ci_table_csv(report));
  run.partial = report.failures > 0;
}

void cmd_lrt(Run& run) {
  const Dataset data = load_data(run);
  const Json& l = section(run.config, "lrt");
  check_keys(l, "lrt", {"pair"});
  const auto pair = get<std::vector<int>>(l, "pair", "lrt", {1, 2});
  if (pair.size() != 2) throw config_error("lrt.pair", "expected two 1-based cluster labels");
  const int k = k_of(run.config);
  if (!(pair[0] >= 1 && pair[0] < pair[1] && pair[1] <= k)) throw config_error("lrt.pair", "need 1 <= a < b <= k");
  const LrtReport report = lrt_equal_centers(data, k, {pair[0] - 1, pair[1] - 1}, fit_config_from_json(run.config));
  run.write_json("lrt.json", to_json(report));
}

void cmd_select(Run& run) {
  const Dataset data = load_data(run);
  const Json& s = section(run.config, "select");
  check_keys(s, "select", {"k_values", "m_values"});
  const FitConfig cfg = fit_config_from_json(run.config);
  const auto ks = get<std::vector<int>>(s, "k_values", "select", {2, 3, 4, 5});
  const auto ms = get<std::vector<double>>(s, "m_values", "select", cfg.m_grid);
  const ValidityGrid grid = select_k(data, ks, ms, cfg, threads_of(run.config));
  run.write("validity_grid.csv", validity_grid_csv(grid));
  run.write_json("validity_grid.json", to_json(grid));
  run.partial = std::any_of(grid.cells.begin(), grid.cells.end(), [](const auto& c) { return !c.ok; });
}

void cmd_consistency(Run& run) {
  const ModelParams truth = truth_of(run.config);
  ExperimentConfig ec = experiment_from_json(run.config);
  if (ec.n_values.empty()) ec.n_values = {500, 1000, 2000, 5000};
  const ConsistencyReport report = consistency_experiment(truth, ec);
  run.write("consistency.csv", consistency_csv(report));
  Json summary{{"center_slope", report.center_slope ? Json(*report.center_slope) : Json(nullptr)},
               {"sigma_slope", report.sigma_slope ? Json(*report.sigma_slope) : Json(nullptr)},
               {"weight_slope", report.weight_slope ? Json(*report.weight_slope) : Json(nullptr)},
               {"failures", report.failures}};
  run.write_json("consistency_summary.json", summary);
  run.partial = !report.failures.empty();
}

void cmd_normality(Run& run) {
  const ModelParams truth = truth_of(run.config);
  ExperimentConfig ec = experiment_from_json(run.config);
  if (ec.n_values.empty()) ec.n_values = {100, 2000};
  if (!section(run.config, "experiment").contains("replicates")) ec.replicates = 100;
  const double level = get<double>(section(run.config, "experiment"), "level", "experiment", 0.01);
  const NormalityReport report = normality_experiment(truth, ec, level);
  run.write("whitened.csv", normality_csv(report));
  Json rows = Json::array();
  for (const auto& r : report.rows) {
    Json ks = Json::array();
    for (std::size_t c = 0; c < r.ks.size(); ++c) {
      ks.push_back({{"coordinate", r.coordinates[c]}, {"statistic", r.ks[c].statistic}, {"p_value", r.ks[c].p_value}});
    }
    rows.push_back({{"n", r.n}, {"succeeded", r.succeeded}, {"failed", r.failed}, {"mean_ks", r.mean_ks},
                    {"pass_rate", r.pass_rate}, {"pseudo_whitened", r.pseudo_whitened}, {"ks", std::move(ks)}});
  }
  run.write_json("ks_summary.json", Json{{"level", level}, {"rows", std::move(rows)}, {"failures", report.failures}});
  run.partial = !report.failures.empty();
}

}  // namespace

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"simulate", "fit", "bootstrap", "lrt", "select", "consistency",
                                              "normality"};
  return names;
}

FitConfig fit_config_from_json(const Json& config) {
  const Json& f = section(config, "fit");
  check_keys(f, "fit", {"m_grid", "max_mm_iters", "theta_tol", "nll_tol", "post_mm_max_iters",
                        "scale_weight_max_iters", "is_samples", "proposal_g_min", "proposal_g_max", "restarts",
                        "init_restarts", "fcm_iters", "gradient", "bounds"});
  FitConfig c;
  c.seed = seed_of(config);
  c.m_grid = get<std::vector<double>>(f, "m_grid", "fit", c.m_grid);
  c.max_mm_iters = get<int>(f, "max_mm_iters", "fit", c.max_mm_iters);
  c.theta_tol = get<double>(f, "theta_tol", "fit", c.theta_tol);
  c.nll_tol = get<double>(f, "nll_tol", "fit", c.nll_tol);
  c.post_mm_max_iters = get<int>(f, "post_mm_max_iters", "fit", c.post_mm_max_iters);
  c.scale_weight_max_iters = get<int>(f, "scale_weight_max_iters", "fit", c.scale_weight_max_iters);
  c.is_samples = get<int>(f, "is_samples", "fit", c.is_samples);
  c.proposal_g_min = get<int>(f, "proposal_g_min", "fit", c.proposal_g_min);
  c.proposal_g_max = get<int>(f, "proposal_g_max", "fit", c.proposal_g_max);
  c.restarts = get<int>(f, "restarts", "fit", c.restarts);
  c.init_restarts = get<int>(f, "init_restarts", "fit", c.init_restarts);
  c.fcm_iters = get<int>(f, "fcm_iters", "fit", c.fcm_iters);
  const auto gradient = get<std::string>(f, "gradient", "fit", "analytic");
  if (gradient == "analytic") {
    c.gradient = GradientMode::analytic;
  } else if (gradient == "finite_difference") {
    c.gradient = GradientMode::finite_difference;
  } else {
    throw config_error("fit.gradient", "expected \"analytic\" or \"finite_difference\"");
  }
  const Json& b = section(f, "bounds");
  check_keys(b, "fit.bounds", {"sigma_min", "sigma_max", "eps_w", "m_min", "m_max", "center_box"});
  c.bounds.sigma_min = get<double>(b, "sigma_min", "fit.bounds", c.bounds.sigma_min);
  c.bounds.sigma_max = get<double>(b, "sigma_max", "fit.bounds", c.bounds.sigma_max);
  c.bounds.eps_w = get<double>(b, "eps_w", "fit.bounds", c.bounds.eps_w);
  c.bounds.m_min = get<double>(b, "m_min", "fit.bounds", c.bounds.m_min);
  c.bounds.m_max = get<double>(b, "m_max", "fit.bounds", c.bounds.m_max);
  for (const auto& side : get<std::vector<std::vector<double>>>(b, "center_box", "fit.bounds", {})) {
    if (side.size() != 2 || !(side[0] < side[1])) throw config_error("fit.bounds.center_box", "each entry is [lo, hi] with lo < hi");
    c.bounds.center_box.push_back({side[0], side[1]});
  }
  for (double m : c.m_grid) {
    if (m < c.bounds.m_min || m > c.bounds.m_max) throw config_error("fit.m_grid", "values must lie within [m_min, m_max]");
  }
  return c;
}

Json resolve_config(Json file_config, const Json& overrides) {
  if (file_config.is_null()) file_config = Json::object();
  check_keys(file_config, "", {"seed", "threads", "out_dir", "data", "k", "n", "params", "chain", "fit", "bootstrap",
                               "lrt", "select", "experiment"});
  for (const auto& [key, value] : overrides.items()) {
    if (key == "fit" || key == "bootstrap") {
      for (const auto& [sub, v] : value.items()) file_config[key][sub] = v;
    } else {
      file_config[key] = value;
    }
  }
  if (!file_config.contains("seed")) {
    std::uint64_t seed = 1;
    if (const char* env = std::getenv("WFCM_SEED"); env && *env) {
      try {
        seed = std::stoull(env);
      } catch (const std::exception&) {
        throw config_error("WFCM_SEED", "must be a non-negative integer");
      }
    }
    file_config["seed"] = seed;
  }
  if (!file_config.contains("threads")) file_config["threads"] = 1;
  if (!file_config.contains("out_dir")) file_config["out_dir"] = "out";
  if (threads_of(file_config) < 1) throw config_error("threads", "must be >= 1");
  return file_config;
}

int run_command(const std::string& name, const Json& config, std::ostream& out, std::ostream& err) {
  const std::string started = utc_now();
  Run run{name, config, fs::path(get<std::string>(config, "out_dir", "", "out"))};
  int code = kExitOk;
  std::string error;
  try {
    if (name == "simulate") {
      cmd_simulate(run);
    } else if (name == "fit") {
      cmd_fit(run);
    } else if (name == "bootstrap") {
      cmd_bootstrap(run);
    } else if (name == "lrt") {
      cmd_lrt(run);
    } else if (name == "select") {
      cmd_select(run);
    } else if (name == "consistency") {
      cmd_consistency(run);
    } else if (name == "normality") {
      cmd_normality(run);
    } else {
      throw Error("unknown-command", name, ErrorKind::validation);
    }
    code = run.partial ? kExitPartial : kExitOk;
  } catch (const Error& e) {
    error = e.what();
    code = e.kind() == ErrorKind::validation ? kExitValidation : kExitNumerical;
    err << "error: " << e.what() << "\n";
  } catch (const Json::exception& e) {
    error = e.what();
    code = kExitValidation;
    err << "error: config: " << e.what() << "\n";
  }
  try {
    Json manifest{{"command", name},
                  {"config_digest", sha256_hex(config.dump())},
                  {"seed", seed_of(config)},
                  {"input_digest", run.input_digest.empty() ? Json(nullptr) : Json(run.input_digest)},
                  {"tool_version", kToolVersion},
                  {"started_at", started},
                  {"finished_at", utc_now()},
                  {"exit_code", code},
                  {"outputs", run.outputs}};
    if (!error.empty()) manifest["error"] = error;
    write_text(run.out_dir / "manifest.json", manifest.dump(2) + "\n");
  } catch (const std::exception& e) {
    err << "error: could not write the run manifest: " << e.what() << "\n";
    if (code == kExitOk) code = kExitNumerical;
  }
  if (code == kExitOk || code == kExitPartial) {
    out << name << ": wrote " << run.outputs.size() << " file(s) to " << run.out_dir.string()
        << (code == kExitPartial ? " (partial)" : "") << "\n";
  }
  return code;
}

}  // namespace wfcm
