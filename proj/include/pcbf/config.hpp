#pragma once

#include "pcbf/experiments.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace pcbf {

/// The file could not be read or parsed into a run configuration.
class ConfigParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Everything a `run` needs. Sections absent from the file keep the built-in
/// defaults, which match the shipped presets.
struct RunConfig {
  std::optional<ScenarioConfig> scenario;  // [scenario], [road], [vehicle.*]
  bool safety_critical = true;             // a collision turns into a failing exit
  PredictionSettings predict;
  std::vector<AlphaVector> sweep_styles;
  StylePolicy policy = StylePolicy::standard();
  RidgeConfig ridge;           // [adaptive] learner settings
  AdaptiveOptions adaptive;
  double adaptive_jitter = 0.0;
  InvarianceSettings invariance;
};

/// INI-style text:
///   [scenario]  name, dt, horizon, r_safe, seed, lookahead, safety_critical
///   [road]      type = standard (angle_deg, ramp_length, merge_point)
///               or explicit (main_start, main_end, ramp_start, ramp_end, merge_point)
///   [vehicle.<id>] role, lane, heading, position | merge_offset, velocity | speed,
///               alpha, desired_speed, gain, u_min, u_max, safety_filter
///   [predict] [sweep] [adaptive] [invariance]  experiment settings
/// Vectors are space separated ("1 0"); lists of styles use ';' between items.
/// Lines starting with ';' are comments. Vehicles keep file order.
RunConfig parse_config(std::istream& in);
RunConfig load_config(const std::filesystem::path& path);

/// Per-rule verdicts for `validate`: raw checks that would otherwise stop the
/// parser (negative weights, unknown keys) plus every scenario and experiment
/// rule. An unreadable file yields a single failing "readable" rule.
struct RuleResult {
  std::string rule;
  bool ok = true;
  std::string detail;
};
std::vector<RuleResult> validate_config(std::istream& in);

/// Built-in scenario defaults per experiment; identical to presets/<name>.cfg.
RunConfig default_config(const std::string& experiment);

AlphaVector parse_alpha(const std::string& text);
std::vector<AlphaVector> parse_style_list(const std::string& text);
/// One style per non-empty, non-comment line.
std::vector<AlphaVector> parse_style_file(std::istream& in);

}  // namespace pcbf
