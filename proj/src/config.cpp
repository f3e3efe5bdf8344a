#include "pcbf/config.hpp"

#include "presets_embedded.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <type_traits>
#include <sstream>

namespace pcbf {

namespace {

namespace pt = boost::property_tree;

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<double> parse_numbers(const std::string& text) {
  std::vector<double> out;
  std::istringstream in(text);
  std::string tok;
  while (in >> tok) {
    double v = 0.0;
    const auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || p != tok.data() + tok.size() || !std::isfinite(v)) {
      throw ConfigParseError("not a number: '" + tok + "'");
    }
    out.push_back(v);
  }
  return out;
}

// Records problems either by throwing (run) or by collecting them (validate).
class Reader {
 public:
  explicit Reader(std::vector<RuleResult>* diag) : diag_(diag) {}

  void problem(const std::string& rule, const std::string& detail) {
    if (!diag_) throw ConfigParseError(rule + ": " + detail);
    diag_->push_back({rule, false, detail});
    failed_.insert(rule);
  }
  void pass(const std::string& rule) {
    if (diag_) diag_->push_back({rule, true, {}});
  }
  bool failed(const std::string& rule) const { return failed_.count(rule) > 0; }

  // Section accessor that tracks which keys were consumed.
  class Section {
   public:
    Section(Reader& r, std::string name, const pt::ptree* tree)
        : r_(r), name_(std::move(name)), tree_(tree) {}

    bool present() const { return tree_ != nullptr; }
    bool has(const std::string& key) const {
      return tree_ && tree_->find(key) != tree_->not_found();
    }
    std::optional<std::string> raw(const std::string& key) {
      used_.insert(key);
      if (!tree_) return std::nullopt;
      const auto it = tree_->find(key);
      if (it == tree_->not_found()) return std::nullopt;
      return trim(it->second.data());
    }
    template <class F, class T = std::invoke_result_t<F, std::string>>
    T parsed(const std::string& key, F&& f, T fallback) {
      const auto text = raw(key);
      if (!text) return fallback;
      try {
        return f(*text);
      } catch (const std::exception& e) {
        r_.problem(name_ + "." + key + ".parse", e.what());
        return fallback;
      }
    }
    double num(const std::string& key, double fallback) {
      return parsed(key, [](const std::string& t) {
        const auto v = parse_numbers(t);
        if (v.size() != 1) throw ConfigParseError("expected one number, got '" + t + "'");
        return v[0];
      }, fallback);
    }
    long integer(const std::string& key, long fallback) {
      return parsed(key, [](const std::string& t) {
        long v = 0;
        const auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
        if (ec != std::errc() || p != t.data() + t.size()) {
          throw ConfigParseError("expected an integer, got '" + t + "'");
        }
        return v;
      }, fallback);
    }
    std::size_t count(const std::string& key, std::size_t fallback) {
      const long v = integer(key, static_cast<long>(fallback));
      if (v < 0) {
        r_.problem(name_ + "." + key + ".parse", "must be non-negative");
        return fallback;
      }
      return static_cast<std::size_t>(v);
    }
    bool flag(const std::string& key, bool fallback) {
      return parsed(key, [](const std::string& t) {
        if (t == "true" || t == "yes" || t == "1" || t == "on") return true;
        if (t == "false" || t == "no" || t == "0" || t == "off") return false;
        throw ConfigParseError("expected a boolean, got '" + t + "'");
      }, fallback);
    }
    Vec2 vec2(const std::string& key, const Vec2& fallback) {
      return parsed(key, [](const std::string& t) {
        const auto v = parse_numbers(t);
        if (v.size() != 2) throw ConfigParseError("expected two numbers, got '" + t + "'");
        return Vec2(v[0], v[1]);
      }, fallback);
    }
    std::string word(const std::string& key, const std::string& fallback) {
      return raw(key).value_or(fallback);
    }
    void finish() {
      if (!tree_) return;
      for (const auto& kv : *tree_) {
        if (!used_.count(kv.first)) {
          r_.problem(name_ + "." + kv.first + ".known_key", "unknown key");
        }
      }
    }
    const std::string& name() const { return name_; }

   private:
    Reader& r_;
    std::string name_;
    const pt::ptree* tree_;
    std::set<std::string> used_;
  };

  std::vector<RuleResult>* diag_;
  std::set<std::string> failed_;
};

const pt::ptree* child(const pt::ptree& root, const std::string& name) {
  const auto it = root.find(name);
  return it == root.not_found() ? nullptr : &it->second;
}

// Raw weights; negatives are reported (validate) or rejected (run).
AlphaVector read_alpha(Reader& r, Reader::Section& s, const std::string& key,
                       const std::string& rule, const AlphaVector& fallback) {
  const auto text = s.raw(key);
  if (!text) return fallback;
  std::vector<double> c;
  try {
    c = parse_numbers(*text);
  } catch (const std::exception& e) {
    r.problem(s.name() + "." + key + ".parse", e.what());
    return fallback;
  }
  if (c.empty()) {
    r.problem(s.name() + "." + key + ".parse", "empty weight list");
    return fallback;
  }
  if (std::any_of(c.begin(), c.end(), [](double v) { return v < 0.0; })) {
    r.problem(rule, "alpha coefficients must be non-negative: " + *text);
    for (double& v : c) v = std::max(v, 0.0);
  }
  return AlphaVector(std::move(c));
}

std::vector<AlphaVector> read_styles(Reader& r, Reader::Section& s, const std::string& key,
                                     std::vector<AlphaVector> fallback) {
  const auto text = s.raw(key);
  if (!text) return fallback;
  std::vector<AlphaVector> out;
  std::size_t item = 0;
  std::istringstream in(*text);
  std::string part;
  while (std::getline(in, part, ';')) {
    if (trim(part).empty()) continue;
    std::vector<double> c;
    try {
      c = parse_numbers(part);
    } catch (const std::exception& e) {
      r.problem(s.name() + "." + key + ".parse", e.what());
      continue;
    }
    if (std::any_of(c.begin(), c.end(), [](double v) { return v < 0.0; })) {
      r.problem(s.name() + "." + key + "[" + std::to_string(item) + "].alpha_nonnegative",
                "alpha coefficients must be non-negative");
      for (double& v : c) v = std::max(v, 0.0);
    }
    out.emplace_back(std::move(c));
    ++item;
  }
  if (out.empty()) r.problem(s.name() + "." + key + ".parse", "no styles listed");
  return out;
}

HdotSource read_hdot(Reader& r, Reader::Section& s, HdotSource fallback) {
  const auto w = s.raw("hdot");
  if (!w) return fallback;
  if (*w == "finite_difference") return HdotSource::kFiniteDifference;
  if (*w == "analytic") return HdotSource::kAnalytic;
  r.problem(s.name() + ".hdot.parse", "expected finite_difference or analytic");
  return fallback;
}

BasisAt read_basis(Reader& r, Reader::Section& s, BasisAt fallback) {
  const auto w = s.raw("basis");
  if (!w) return fallback;
  if (*w == "previous") return BasisAt::kPrevious;
  if (*w == "current") return BasisAt::kCurrent;
  r.problem(s.name() + ".basis.parse", "expected previous or current");
  return fallback;
}

void read_ridge(Reader& r, Reader::Section& s, RidgeConfig& ridge, AdmissionFilter& filter) {
  ridge.r = s.num("ridge_r", ridge.r);
  ridge.q_hypothesis = static_cast<int>(s.integer("q_hypothesis", ridge.q_hypothesis));
  ridge.convergence_tol = s.num("convergence_tol", ridge.convergence_tol);
  ridge.convergence_window =
      static_cast<int>(s.integer("convergence_window", ridge.convergence_window));
  if (const auto w = s.raw("sign")) {
    if (*w == "active_constraint") {
      ridge.sign = SignConvention::kActiveConstraint;
    } else if (*w == "as_written") {
      ridge.sign = SignConvention::kAsWritten;
    } else {
      r.problem(s.name() + ".sign.parse", "expected active_constraint or as_written");
    }
  }
  filter.enabled = s.flag("admission", filter.enabled);
  filter.accel_threshold = s.num("accel_threshold", filter.accel_threshold);
  filter.reject_saturated = s.flag("reject_saturated", filter.reject_saturated);
  filter.require_alignment = s.flag("require_alignment", filter.require_alignment);
  filter.alignment_tol = s.num("alignment_tol", filter.alignment_tol);
}

Road read_road(Reader& r, Reader::Section& s) {
  const std::string type = s.word("type", "standard");
  if (type == "standard") {
    const double angle = s.num("angle_deg", 15.0);
    const double length = s.num("ramp_length", 250.0);
    const Vec2 merge = s.vec2("merge_point", Vec2(100.0, 0.0));
    if (!(length > 0.0)) {
      r.problem("road.ramp_length_positive", "ramp_length must be positive");
      return Road::standard(angle, 250.0, merge);
    }
    return Road::standard(angle, length, merge);
  }
  Road road = Road::standard();
  if (type != "explicit") {
    r.problem("road.type.parse", "expected standard or explicit");
    return road;
  }
  road.main_road.start = s.vec2("main_start", road.main_road.start);
  road.main_road.end = s.vec2("main_end", road.main_road.end);
  road.ramp.start = s.vec2("ramp_start", road.ramp.start);
  road.ramp.end = s.vec2("ramp_end", road.ramp.end);
  road.merge_point = s.vec2("merge_point", road.merge_point);
  return road;
}

Vec2 lane_start_direction(const Road& road, const VehicleSpec& v) {
  switch (v.lane) {
    case Lane::kMain:
      return road.main_road.length() > 0.0 ? road.main_road.direction() : Vec2::UnitX();
    case Lane::kRamp: return road.ramp.length() > 0.0 ? road.ramp.direction() : Vec2::UnitX();
    case Lane::kFree: return v.heading.norm() > 0.0 ? Vec2(v.heading.normalized()) : Vec2::UnitX();
  }
  return Vec2::UnitX();
}

VehicleSpec read_vehicle(Reader& r, Reader::Section& s, const std::string& id, const Road& road) {
  VehicleSpec v;
  v.id = id;
  const std::string p = "vehicle[" + id + "].";
  if (id.empty() || id.find_first_of(",|[] \t") != std::string::npos) {
    r.problem(p + "id_charset", "vehicle ids may not contain , | [ ] or blanks");
  }
  try {
    v.role = role_from_string(s.word("role", "neighbor"));
  } catch (const std::exception& e) {
    r.problem(p + "role.parse", e.what());
  }
  try {
    v.lane = lane_from_string(s.word("lane", "main"));
  } catch (const std::exception& e) {
    r.problem(p + "lane.parse", e.what());
  }
  v.heading = s.vec2("heading", v.heading);
  const Vec2 dir = lane_start_direction(road, v);

  const bool has_pos = s.has("position");
  const bool has_off = s.has("merge_offset");
  if (has_pos == has_off) {
    r.problem(p + "position_given", "give exactly one of position, merge_offset");
  }
  if (has_off && v.lane == Lane::kFree) {
    r.problem(p + "merge_offset_lane", "merge_offset needs a main or ramp lane");
  }
  v.initial.position = s.vec2("position", v.initial.position);
  if (has_off) v.initial.position = road.merge_point + s.num("merge_offset", 0.0) * dir;

  const bool has_vel = s.has("velocity");
  const bool has_speed = s.has("speed");
  if (has_vel && has_speed) r.problem(p + "velocity_given", "give at most one of velocity, speed");
  v.initial.velocity = s.vec2("velocity", Vec2::Zero());
  double speed = v.initial.velocity.norm();
  if (has_speed) {
    speed = s.num("speed", 0.0);
    v.initial.velocity = speed * dir;
  }
  v.alpha = read_alpha(r, s, "alpha", p + "alpha_nonnegative", v.alpha);
  v.desired_speed = s.num("desired_speed", (has_vel || has_speed) ? speed : v.desired_speed);
  v.gain = s.num("gain", v.gain);
  v.limits.u_min = s.vec2("u_min", v.limits.u_min);
  v.limits.u_max = s.vec2("u_max", v.limits.u_max);
  v.safety_filter = s.flag("safety_filter", v.safety_filter);
  s.finish();
  return v;
}

RunConfig read_config(const pt::ptree& root, Reader& r) {
  RunConfig cfg;
  static const std::set<std::string> kSections = {"scenario", "road",     "predict",
                                                  "sweep",    "adaptive", "invariance"};
  for (const auto& kv : root) {
    if (!kv.second.data().empty() && kv.second.empty()) {
      r.problem("top_level." + kv.first + ".known_key", "keys must live inside a section");
      continue;
    }
    if (!kSections.count(kv.first) && kv.first.rfind("vehicle.", 0) != 0) {
      r.problem("section[" + kv.first + "].known", "unknown section");
    }
  }

  const bool has_scenario =
      child(root, "scenario") || child(root, "road") ||
      std::any_of(root.begin(), root.end(),
                  [](const auto& kv) { return kv.first.rfind("vehicle.", 0) == 0; });
  if (has_scenario) {
    ScenarioConfig sc;
    Reader::Section s(r, "scenario", child(root, "scenario"));
    sc.name = s.word("name", sc.name);
    sc.dt = s.num("dt", sc.dt);
    sc.horizon = s.integer("horizon", sc.horizon);
    sc.r_safe = s.num("r_safe", sc.r_safe);
    sc.seed = static_cast<std::uint64_t>(s.integer("seed", 0));
    sc.lookahead = s.num("lookahead", sc.lookahead);
    cfg.safety_critical = s.flag("safety_critical", cfg.safety_critical);
    s.finish();

    Reader::Section rs(r, "road", child(root, "road"));
    sc.road = read_road(r, rs);
    rs.finish();

    for (const auto& kv : root) {
      if (kv.first.rfind("vehicle.", 0) != 0) continue;
      Reader::Section vs(r, kv.first, &kv.second);
      sc.vehicles.push_back(read_vehicle(r, vs, kv.first.substr(8), sc.road));
    }
    cfg.scenario = std::move(sc);
  }

  {
    Reader::Section s(r, "predict", child(root, "predict"));
    PredictionSettings& p = cfg.predict;
    p.trials = s.count("trials", p.trials);
    p.q = static_cast<int>(s.integer("q", p.q));
    p.ridge.q_hypothesis = p.q;
    p.alpha_max = s.num("alpha_max", p.alpha_max);
    p.speed_min = s.num("speed_min", p.speed_min);
    p.speed_max = s.num("speed_max", p.speed_max);
    p.closing_min = s.num("closing_min", p.closing_min);
    p.closing_max = s.num("closing_max", p.closing_max);
    p.gap_min = s.num("gap_min", p.gap_min);
    p.gap_max = s.num("gap_max", p.gap_max);
    p.horizon = s.integer("horizon", p.horizon);
    p.dt = s.num("dt", p.dt);
    p.r_safe = s.num("r_safe", p.r_safe);
    p.hdot_source = read_hdot(r, s, p.hdot_source);
    p.basis_at = read_basis(r, s, p.basis_at);
    read_ridge(r, s, p.ridge, p.filter);
    p.threads = static_cast<unsigned>(s.count("threads", p.threads));
    s.finish();
  }
  {
    Reader::Section s(r, "sweep", child(root, "sweep"));
    cfg.sweep_styles = read_styles(r, s, "styles", {});
    s.finish();
  }
  {
    Reader::Section s(r, "adaptive", child(root, "adaptive"));
    cfg.policy.presets = read_styles(r, s, "presets", cfg.policy.presets);
    cfg.policy.reference_h = s.num("reference_h", cfg.policy.reference_h);
    AdaptiveOptions& o = cfg.adaptive;
    o.phase_budget = s.integer("phase_budget", o.phase_budget);
    o.enforce_compatibility = s.flag("enforce_compatibility", o.enforce_compatibility);
    o.hdot_source = read_hdot(r, s, o.hdot_source);
    o.basis_at = read_basis(r, s, o.basis_at);
    read_ridge(r, s, cfg.ridge, o.filter);
    cfg.adaptive_jitter = s.num("jitter", cfg.adaptive_jitter);
    s.finish();
  }
  {
    Reader::Section s(r, "invariance", child(root, "invariance"));
    InvarianceSettings& v = cfg.invariance;
    v.trials = s.count("trials", v.trials);
    v.speed_min = s.num("speed_min", v.speed_min);
    v.speed_max = s.num("speed_max", v.speed_max);
    v.arrival_min = s.num("arrival_min", v.arrival_min);
    v.arrival_max = s.num("arrival_max", v.arrival_max);
    v.offset_max = s.num("offset_max", v.offset_max);
    v.linear_min = s.num("linear_min", v.linear_min);
    v.linear_max = s.num("linear_max", v.linear_max);
    v.cubic_max = s.num("cubic_max", v.cubic_max);
    v.horizon = s.integer("horizon", v.horizon);
    v.limits.u_min = s.vec2("u_min", v.limits.u_min);
    v.limits.u_max = s.vec2("u_max", v.limits.u_max);
    v.threads = static_cast<unsigned>(s.count("threads", v.threads));
    s.finish();
  }
  return cfg;
}

pt::ptree read_tree(std::istream& in) {
  pt::ptree root;
  try {
    pt::read_ini(in, root);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigParseError("line " + std::to_string(e.line()) + ": " + e.message());
  }
  return root;
}

// Validation rules of each settings block, collected without throwing.
template <class F>
void check(std::vector<RuleResult>& out, const std::string& rule, F&& f) {
  try {
    f();
    out.push_back({rule, true, {}});
  } catch (const std::exception& e) {
    out.push_back({rule, false, e.what()});
  }
}

}  // namespace

AlphaVector parse_alpha(const std::string& text) {
  const auto c = parse_numbers(text);
  if (c.empty()) throw ConfigParseError("empty weight list");
  return AlphaVector(c);
}

std::vector<AlphaVector> parse_style_list(const std::string& text) {
  std::vector<AlphaVector> out;
  std::istringstream in(text);
  std::string part;
  while (std::getline(in, part, ';')) {
    if (!trim(part).empty()) out.push_back(parse_alpha(part));
  }
  return out;
}

std::vector<AlphaVector> parse_style_file(std::istream& in) {
  std::vector<AlphaVector> out;
  std::string line;
  while (std::getline(in, line)) {
    const std::string t = trim(line);
    if (t.empty() || t[0] == ';' || t[0] == '#') continue;
    out.push_back(parse_alpha(t));
  }
  if (out.empty()) throw ConfigParseError("style file lists no styles");
  return out;
}

RunConfig parse_config(std::istream& in) {
  const pt::ptree root = read_tree(in);
  Reader r(nullptr);
  try {
    return read_config(root, r);
  } catch (const ConfigError& e) {
    throw ConfigParseError(e.what());
  }
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path.string());
  try {
    return parse_config(in);
  } catch (const ConfigParseError& e) {
    throw ConfigParseError(path.string() + ": " + e.what());
  }
}

std::vector<RuleResult> validate_config(std::istream& in) {
  std::vector<RuleResult> out;
  pt::ptree root;
  try {
    root = read_tree(in);
    out.push_back({"syntax", true, {}});
  } catch (const ConfigParseError& e) {
    out.push_back({"syntax", false, e.what()});
    return out;
  }
  Reader r(&out);
  RunConfig cfg;
  try {
    cfg = read_config(root, r);
  } catch (const std::exception& e) {
    out.push_back({"structure", false, e.what()});
    return out;
  }
  if (cfg.scenario) {
    for (auto& [rule, why] : cfg.scenario->check_rules()) {
      if (r.failed(rule)) continue;  // already reported from the raw text
      out.push_back({rule, !why.has_value(), why.value_or("")});
    }
  }
  check(out, "predict.settings", [&] { cfg.predict.validate(); });
  if (!cfg.sweep_styles.empty()) {
    check(out, "sweep.styles_present", [] {});
  }
  check(out, "adaptive.policy", [&] { cfg.policy.validate(); });
  check(out, "adaptive.ridge", [&] { cfg.ridge.validate(); });
  // The phase budget is only meaningful for configs that set up the adaptive run.
  if (cfg.scenario && root.get_child_optional("adaptive")) {
    check(out, "adaptive.phase_budget", [&] { cfg.adaptive.validate(cfg.scenario->horizon); });
  }
  check(out, "invariance.settings", [&] { cfg.invariance.validate(); });
  return out;
}

RunConfig default_config(const std::string& experiment) {
  for (const auto& p : kEmbeddedPresets) {
    if (experiment == p.name) {
      std::istringstream in{std::string(p.text)};
      return parse_config(in);
    }
  }
  throw ConfigError("no built-in preset named '" + experiment + "'");
}

}  // namespace pcbf
