#include "pcbf/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <json.hpp>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

namespace pcbf {

namespace fs = std::filesystem;

namespace {

class OutputDir {
 public:
  explicit OutputDir(fs::path root) : root_(std::move(root)) {}

  const fs::path& root() const { return root_; }

  // Makes the directory usable: creates it, or clears the files a previous
  // run listed in its manifest. Anything else in there is left alone and
  // refused, so the manifest always covers the whole directory.
  void prepare() {
    if (!fs::exists(root_)) {
      fs::create_directories(root_);
      return;
    }
    if (!fs::is_directory(root_)) throw std::runtime_error(root_.string() + " is not a directory");
    const fs::path old = root_ / kManifestName;
    if (fs::exists(old)) {
      std::ifstream in(old);
      const auto j = nlohmann::json::parse(in, nullptr, /*allow_exceptions=*/false);
      if (j.is_discarded() || !j.contains("files")) {
        throw std::runtime_error("unreadable manifest in " + root_.string());
      }
      for (const auto& f : j["files"]) {
        const fs::path p = root_ / f.at("path").get<std::string>();
        if (fs::is_regular_file(p)) fs::remove(p);
      }
      fs::remove(old);
      // Drop directories the old run created and left empty.
      std::vector<fs::path> dirs;
      for (const auto& e : fs::recursive_directory_iterator(root_)) {
        if (e.is_directory()) dirs.push_back(e.path());
      }
      std::sort(dirs.rbegin(), dirs.rend());
      for (const auto& d : dirs) {
        if (fs::is_empty(d)) fs::remove(d);
      }
    }
    if (!fs::is_empty(root_)) {
      throw std::runtime_error("output directory " + root_.string() +
                               " holds files not written by a previous run");
    }
  }

  void write(const std::string& rel, const std::function<void(std::ostream&)>& fill) {
    const fs::path p = root_ / rel;
    fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + p.string());
    fill(out);
    out.flush();
    if (!out) throw std::runtime_error("write failed: " + p.string());
  }

 private:
  fs::path root_;
};

using Metrics = std::vector<std::pair<std::string, std::string>>;

void write_metrics(std::ostream& out, const Metrics& m) {
  for (const auto& [k, v] : m) out << k << " = " << v << '\n';
}

std::string num(double v) { return format_double(v); }

std::string alpha_text(const AlphaVector& a) {
  std::string s;
  for (std::size_t p = 0; p < a.size(); ++p) s += (p ? " " : "") + format_double(a[p]);
  return s;
}

std::string padded_index(std::size_t k, std::size_t n) {
  const std::size_t width = std::to_string(n > 0 ? n - 1 : 0).size();
  std::ostringstream s;
  s << std::setw(static_cast<int>(width)) << std::setfill('0') << k;
  return s.str();
}

std::string distance_csv_name(std::size_t k, std::size_t n) {
  return "distance/style_" + padded_index(k, n) + ".csv";
}

double min_pair_h(const Trajectory& log) {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& st : log.steps) {
    for (double h : st.pair_h) m = std::min(m, h);
  }
  return m;
}

struct Outcome {
  bool collision = false;
  std::string diagnostic;
};

// ------------------------------------------------------------------ predict

Outcome run_predict(const RunConfig& cfg, std::uint64_t seed, OutputDir& dir, std::ostream& log) {
  const PredictionSummary r = experiment_prediction(cfg.predict, seed);
  Outcome o;
  std::size_t q = 1;
  for (const auto& t : r.trials) {
    q = std::max({q, t.truth.size(), t.estimate ? t.estimate->alpha_hat.size() : 0});
  }

  std::vector<std::string> header = {"trial"};
  for (std::size_t p = 0; p < q; ++p) header.push_back("alpha_true" + std::to_string(p));
  for (std::size_t p = 0; p < q; ++p) header.push_back("alpha_hat" + std::to_string(p));
  for (const char* c : {"rmse", "converged", "convergence_samples", "convergence_step", "samples",
                        "min_h", "collision"}) {
    header.push_back(c);
  }
  std::vector<std::vector<std::string>> rows;
  std::vector<EstimateRow> est;
  for (const auto& t : r.trials) {
    const AlphaVector truth = t.truth.padded(q);
    std::vector<std::string> row = {std::to_string(t.trial)};
    for (std::size_t p = 0; p < q; ++p) row.push_back(num(truth[p]));
    for (std::size_t p = 0; p < q; ++p) {
      row.push_back(t.estimate ? num(t.estimate->alpha_hat.padded(q)[p]) : "nan");
    }
    const double min_h = min_pair_h(t.log);
    const bool collided = min_h < -TrialMetrics::kCollisionTol;
    row.push_back(num(t.rmse));
    row.push_back(t.converged ? "1" : "0");
    row.push_back(std::to_string(t.convergence_samples));
    row.push_back(std::to_string(t.convergence_step));
    row.push_back(std::to_string(t.samples.size()));
    row.push_back(num(min_h));
    row.push_back(collided ? "1" : "0");
    rows.push_back(std::move(row));
    if (collided) {
      o.collision = true;
      o.diagnostic =
          "predict trial " + std::to_string(t.trial) + " collided (min h " + num(min_h) + ")";
    }
    const auto e = estimate_rows(std::to_string(t.trial), t.history, t.samples);
    est.insert(est.end(), e.begin(), e.end());
    dir.write("trajectories/trial_" + padded_index(t.trial, r.trials.size()) + ".csv",
              [&](std::ostream& out) { write_trajectory_csv(out, t.log); });
    dir.write("samples/trial_" + padded_index(t.trial, r.trials.size()) + ".csv",
              [&](std::ostream& out) { write_samples_csv(out, t.samples); });
  }
  dir.write("summary.csv", [&](std::ostream& out) { write_csv(out, header, rows); });
  dir.write("estimates.csv", [&](std::ostream& out) { write_estimates_csv(out, est); });

  long max_conv = -1;
  for (const auto& t : r.trials) max_conv = std::max(max_conv, t.convergence_samples);
  const Metrics m = {
      {"experiment", "predict"},
      {"seed", std::to_string(seed)},
      {"trials", std::to_string(r.trials.size())},
      {"hdot", cfg.predict.hdot_source == HdotSource::kAnalytic ? "analytic" : "finite_difference"},
      {"mean_rmse", num(r.mean_rmse)},
      {"max_rmse", num(r.max_rmse)},
      {"converged_trials", std::to_string(r.converged_trials)},
      {"max_convergence_samples", std::to_string(max_conv)},
      {"collision", o.collision ? "1" : "0"},
  };
  dir.write("metrics.txt", [&](std::ostream& out) { write_metrics(out, m); });
  log << "predict: " << r.trials.size() << " trials, mean rmse " << num(r.mean_rmse) << ", "
      << r.converged_trials << " converged\n";
  return o;
}

// -------------------------------------------------------------------- sweep

Outcome run_sweep(const RunConfig& cfg, std::uint64_t seed, OutputDir& dir, std::ostream& log) {
  if (!cfg.scenario) throw ConfigError("sweep: config has no scenario");
  SweepSettings s;
  s.scenario = *cfg.scenario;
  s.scenario.seed = seed;
  s.styles = cfg.sweep_styles;
  const std::vector<SweepRun> runs = experiment_behavior_sweep(s);
  const std::size_t ego = *s.scenario.find_role(Role::kEgo);
  const std::size_t obj = *s.scenario.find_role(Role::kObject);

  Outcome o;
  std::vector<std::vector<std::string>> rows;
  for (std::size_t k = 0; k < runs.size(); ++k) {
    const SweepRun& r = runs[k];
    const TrialMetrics& m = r.trial.metrics;
    rows.push_back({std::to_string(k), alpha_text(r.style), num(r.min_distance),
                    num(m.min_h_overall()), std::to_string(m.merge_step[ego]),
                    std::to_string(m.merge_step[obj]), to_string(r.order),
                    std::to_string(m.infeasible_steps), m.collision ? "1" : "0"});
    if (m.collision) {
      o.collision = true;
      o.diagnostic = "sweep style " + std::to_string(k) + " [" + alpha_text(r.style) +
                     "] collided (min h " + num(m.min_h_overall()) + ")";
    }
    dir.write(distance_csv_name(k, runs.size()), [&](std::ostream& out) {
      out << "step,time,distance\n";
      for (std::size_t t = 0; t < r.distance.size(); ++t) {
        const long step = r.trial.log.steps[t].step;
        out << step << ',' << num(static_cast<double>(step) * s.scenario.dt) << ','
            << num(r.distance[t]) << '\n';
      }
    });
    dir.write("trajectories/style_" + padded_index(k, runs.size()) + ".csv",
              [&](std::ostream& out) { write_trajectory_csv(out, r.trial.log); });
  }
  dir.write("summary.csv", [&](std::ostream& out) {
    write_csv(out,
              {"index", "alpha", "min_distance", "min_h", "ego_merge_step", "object_merge_step",
               "order", "infeasible_steps", "collision"},
              rows);
  });
  Metrics m = {{"experiment", "sweep"},
               {"scenario", s.scenario.name},
               {"seed", std::to_string(seed)},
               {"styles", std::to_string(runs.size())},
               {"r_safe", num(s.scenario.r_safe)}};
  for (std::size_t k = 0; k < runs.size(); ++k) {
    m.emplace_back("style_" + padded_index(k, runs.size()),
                   alpha_text(runs[k].style) + " | min_distance " + num(runs[k].min_distance) +
                       " | " + to_string(runs[k].order));
  }
  m.emplace_back("collision", o.collision ? "1" : "0");
  dir.write("metrics.txt", [&](std::ostream& out) { write_metrics(out, m); });
  log << "sweep: " << runs.size() << " styles on " << s.scenario.name << '\n';
  return o;
}

// ----------------------------------------------------------------- adaptive

Outcome run_adaptive(const RunConfig& cfg, std::uint64_t seed, OutputDir& dir, std::ostream& log) {
  if (!cfg.scenario) throw ConfigError("adaptive: config has no scenario");
  AdaptiveSettings s;
  s.scenario = *cfg.scenario;
  s.policy = cfg.policy;
  s.ridge = cfg.ridge;
  s.options = cfg.adaptive;
  s.jitter = cfg.adaptive_jitter;
  const PairedComparison c = experiment_prediction_in_loop(s, seed);

  const TrialMetrics& a = c.with_prediction.trial.metrics;
  const TrialMetrics& b = c.without_prediction.trial.metrics;
  Outcome o;
  if (a.collision || b.collision) {
    o.collision = true;
    o.diagnostic = std::string("adaptive run ") + (a.collision ? "with" : "without") +
                   " prediction collided (min h " +
                   num(std::min(a.min_h_overall(), b.min_h_overall())) + ")";
  }
  dir.write("trajectory_with_prediction.csv",
            [&](std::ostream& out) { write_trajectory_csv(out, c.with_prediction.trial.log); });
  dir.write("trajectory_without_prediction.csv",
            [&](std::ostream& out) { write_trajectory_csv(out, c.without_prediction.trial.log); });
  dir.write("estimates.csv", [&](std::ostream& out) {
    write_estimates_csv(out, estimate_rows("object", c.with_prediction.history,
                                           c.with_prediction.samples));
  });
  dir.write("samples.csv",
            [&](std::ostream& out) { write_samples_csv(out, c.with_prediction.samples); });

  std::vector<std::vector<std::string>> rows;
  const auto& ids = c.with_prediction.trial.log.vehicle_ids;
  auto pct = [](long with, long without) {
    return (with >= 0 && without > 0)
               ? num(100.0 * static_cast<double>(with - without) / static_cast<double>(without))
               : std::string("nan");
  };
  for (std::size_t v = 0; v < ids.size(); ++v) {
    const long w = a.merge_step[v], wo = b.merge_step[v];
    rows.push_back({ids[v], std::to_string(w), std::to_string(wo),
                    (w >= 0 && wo >= 0) ? std::to_string(w - wo) : "nan", pct(w, wo)});
  }
  rows.push_back({"overall", std::to_string(a.overall_completion()),
                  std::to_string(b.overall_completion()),
                  (a.overall_completion() >= 0 && b.overall_completion() >= 0)
                      ? std::to_string(a.overall_completion() - b.overall_completion())
                      : "nan",
                  pct(a.overall_completion(), b.overall_completion())});
  dir.write("summary.csv", [&](std::ostream& out) {
    write_csv(out, {"vehicle", "merge_with", "merge_without", "delta_steps", "delta_pct"}, rows);
  });

  const auto& est = c.with_prediction.estimate;
  const Metrics m = {
      {"experiment", "adaptive"},
      {"scenario", c.scenario.name},
      {"seed", std::to_string(seed)},
      {"estimate", est ? alpha_text(est->alpha_hat) : "none"},
      {"estimate_samples", std::to_string(c.with_prediction.samples.size())},
      {"converged", c.with_prediction.converged ? "1" : "0"},
      {"converged_step", std::to_string(c.with_prediction.converged_step)},
      {"ego_alpha_with", alpha_text(c.with_prediction.ego_alpha)},
      {"ego_alpha_without", alpha_text(c.without_prediction.ego_alpha)},
      {"compatibility_enforced", c.with_prediction.compatibility_enforced ? "1" : "0"},
      {"ego_merge_delta_steps", std::to_string(c.ego_merge_delta)},
      {"ego_merge_delta_pct", num(c.ego_merge_pct)},
      {"overall_delta_steps", std::to_string(c.overall_delta)},
      {"overall_delta_pct", num(c.overall_pct)},
      {"min_h_with", num(a.min_h_overall())},
      {"min_h_without", num(b.min_h_overall())},
      {"infeasible_steps_with", std::to_string(a.infeasible_steps)},
      {"infeasible_steps_without", std::to_string(b.infeasible_steps)},
      {"collision", o.collision ? "1" : "0"},
  };
  dir.write("metrics.txt", [&](std::ostream& out) { write_metrics(out, m); });
  log << "adaptive: ego merge delta " << c.ego_merge_delta << " steps, overall delta "
      << c.overall_delta << " steps\n";
  return o;
}

// --------------------------------------------------------------- invariance

Outcome run_invariance(const RunConfig& cfg, std::uint64_t seed, OutputDir& dir,
                       std::ostream& log) {
  const InvarianceSummary r = experiment_invariance(cfg.invariance, seed);
  Outcome o;
  std::vector<std::vector<std::string>> rows;
  std::size_t worst = 0;
  for (const auto& t : r.trials) {
    const auto& v = t.scenario.vehicles;
    rows.push_back({std::to_string(t.trial), alpha_text(v[0].alpha), alpha_text(v[1].alpha),
                    num(v[0].initial.velocity.norm()), num(v[1].initial.velocity.norm()),
                    num(t.metrics.min_h_overall()), std::to_string(t.metrics.merge_step[0]),
                    std::to_string(t.metrics.merge_step[1]),
                    std::to_string(t.metrics.infeasible_steps), t.metrics.collision ? "1" : "0"});
    if (t.metrics.min_h_overall() < r.trials[worst].metrics.min_h_overall()) worst = t.trial;
    if (t.metrics.collision && !o.collision) {
      o.collision = true;
      o.diagnostic = "invariance trial " + std::to_string(t.trial) + " collided (min h " +
                     num(t.metrics.min_h_overall()) + ")";
    }
  }
  dir.write("summary.csv", [&](std::ostream& out) {
    write_csv(out,
              {"trial", "ego_alpha", "merger_alpha", "ego_speed", "merger_speed", "min_h",
               "ego_merge_step", "merger_merge_step", "infeasible_steps", "collision"},
              rows);
  });
  dir.write("trajectory_closest.csv",
            [&](std::ostream& out) { write_trajectory_csv(out, r.trials[worst].log); });
  const Metrics m = {
      {"experiment", "invariance"},
      {"seed", std::to_string(seed)},
      {"trials", std::to_string(r.trials.size())},
      {"collisions", std::to_string(r.collisions)},
      {"min_h", num(r.min_h)},
      {"closest_trial", std::to_string(worst)},
      {"infeasible_steps", std::to_string(r.infeasible_steps)},
      {"vehicle_steps", std::to_string(r.vehicle_steps)},
      {"infeasible_fraction", num(r.infeasible_fraction())},
      {"collision", o.collision ? "1" : "0"},
  };
  dir.write("metrics.txt", [&](std::ostream& out) { write_metrics(out, m); });
  log << "invariance: " << r.trials.size() << " trials, " << r.collisions << " collisions, "
      << "infeasible fraction " << num(r.infeasible_fraction()) << '\n';
  return o;
}

}  // namespace

const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> kNames = {"predict", "sweep", "adaptive", "invariance"};
  return kNames;
}

fs::path resolve_out_dir(const RunRequest& req) {
  if (req.out_dir) return *req.out_dir;
  const char* env = std::getenv(kOutDirEnv);
  const fs::path root = (env && *env) ? fs::path(env) : fs::path("pcbf-out");
  return root / req.experiment;
}

int cmd_run(const RunRequest& req, std::ostream& log, std::ostream& err) {
  const auto& names = experiment_names();
  if (std::find(names.begin(), names.end(), req.experiment) == names.end()) {
    err << "unknown experiment '" << req.experiment << "' (expected predict, sweep, adaptive or "
        << "invariance)\n";
    return exit_code::kUsage;
  }
  if (req.styles && req.experiment != "sweep") {
    err << "--styles only applies to the sweep experiment\n";
    return exit_code::kUsage;
  }

  RunConfig cfg;
  try {
    cfg = req.config ? load_config(*req.config) : default_config(req.experiment);
    if (req.styles) {
      std::ifstream in(*req.styles);
      if (!in) throw ConfigParseError("cannot open styles file " + req.styles->string());
      cfg.sweep_styles = parse_style_file(in);
    }
    if (req.trials) {
      cfg.predict.trials = *req.trials;
      cfg.invariance.trials = *req.trials;
    }
    // Settings errors are configuration errors too; surface them before any output.
    if (req.experiment == "predict") cfg.predict.validate();
    if (req.experiment == "invariance") cfg.invariance.validate();
    if (req.experiment == "sweep" || req.experiment == "adaptive") {
      if (!cfg.scenario) throw ConfigParseError("config has no [scenario]/[vehicle.*] sections");
      cfg.scenario->validate();
    }
    if (req.experiment == "sweep" && cfg.sweep_styles.empty()) {
      throw ConfigParseError("sweep needs styles ([sweep] styles or --styles)");
    }
    if (req.experiment == "adaptive") {
      AdaptiveSettings s{*cfg.scenario, cfg.policy, cfg.ridge, cfg.adaptive, cfg.adaptive_jitter};
      s.validate();
    }
  } catch (const std::exception& e) {
    err << "config error: " << e.what() << '\n';
    return exit_code::kConfig;
  }

  const std::uint64_t seed = req.seed ? *req.seed : (cfg.scenario ? cfg.scenario->seed : 0);
  const fs::path out_dir = resolve_out_dir(req);
  try {
    OutputDir dir(out_dir);
    dir.prepare();
    Outcome o;
    if (req.experiment == "predict") o = run_predict(cfg, seed, dir, log);
    if (req.experiment == "sweep") o = run_sweep(cfg, seed, dir, log);
    if (req.experiment == "adaptive") o = run_adaptive(cfg, seed, dir, log);
    if (req.experiment == "invariance") o = run_invariance(cfg, seed, dir, log);

    RunManifest man;
    man.experiment = req.experiment;
    man.config_path =
        req.config ? req.config->generic_string() : "<built-in " + req.experiment + ">";
    man.seed = seed;
    man.out_dir = out_dir.generic_string();
    man.collect(out_dir);
    man.write(out_dir);
    log << "wrote " << man.files.size() << " files to " << out_dir.string() << '\n';

    if (o.collision && cfg.safety_critical) {
      err << "collision: " << o.diagnostic << '\n';
      return exit_code::kCollision;
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return exit_code::kFailure;
  }
  return exit_code::kOk;
}

int cmd_validate(const fs::path& config, std::ostream& out, std::ostream& err) {
  std::ifstream in(config);
  if (!in) {
    err << "cannot open " << config.string() << '\n';
    return exit_code::kFailure;
  }
  const std::vector<RuleResult> rules = validate_config(in);
  std::size_t failed = 0;
  for (const auto& r : rules) {
    out << (r.ok ? "PASS " : "FAIL ") << r.rule;
    if (!r.ok && !r.detail.empty()) out << "  (" << r.detail << ")";
    out << '\n';
    if (!r.ok) ++failed;
  }
  out << rules.size() - failed << "/" << rules.size() << " rules pass\n";
  return exit_code::kOk;
}

}  // namespace pcbf
