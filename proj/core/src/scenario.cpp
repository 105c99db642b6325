#include "linkdrift/scenario.hpp"

#include <cstdlib>
#include <set>

#include <nlohmann/json.hpp>

#include "linkdrift/errors.hpp"
#include "linkdrift/io.hpp"
#include "linkdrift/rng.hpp"

namespace linkdrift {

using nlohmann::json;

namespace {

// Reads typed fields from one JSON object and rejects keys nobody asked for.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_ + ": expected an object");
  }
  ~Section() noexcept(false) {
    if (std::uncaught_exceptions() > 0) return;
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) throw ConfigError(path_ + ": unknown key '" + it.key() + "'");
  }

  template <class T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError(path_ + "." + key + ": wrong type");
    }
  }

  const json* child(const char* key) {
    seen_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }
  std::string path(const char* key) const { return path_ + "." + key; }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void parse_traffic(const json& j, TrafficModelConfig& t) {
  Section s(j, "traffic");
  s.get("steps", t.steps);
  s.get("total_load_tbps", t.total_load_tbps);
  s.get("period", t.period);
  s.get("amplitude_fraction", t.amplitude_fraction);
  s.get("type_share", t.type_share);
  s.get("period_scale", t.period_scale);
  s.get("phase_jitter", t.phase_jitter);
}

void parse_forecaster(const json& j, ForecasterConfig& f) {
  Section s(j, "forecaster");
  s.get("history", f.history);
  s.get("train_steps", f.train_steps);
  s.get("epochs", f.epochs);
  s.get("learning_rate", f.learning_rate);
  s.get("lr_decay", f.lr_decay);
  s.get("lr_decay_every", f.lr_decay_every);
  s.get("clip_norm", f.clip_norm);
  s.get("batch_size", f.batch_size);
  s.get("partial_fit_epochs", f.partial_fit_epochs);
  s.get("partial_fit_learning_rate", f.partial_fit_learning_rate);
}

}  // namespace

void CalibrationConfig::validate() const {
  if (!(floor_tbps > 0.0)) throw ConfigError("calibration.floor_tbps must be positive");
  if (!(ceiling_tbps > floor_tbps)) throw ConfigError("calibration.ceiling_tbps must exceed floor_tbps");
  if (iterations < 1) throw ConfigError("calibration.iterations must be at least 1");
  if (pilot_steps < 2) throw ConfigError("calibration.pilot_steps must be at least 2");
  if (pilot_failure_step < 1 || pilot_failure_step >= pilot_steps)
    throw ConfigError("calibration.pilot_failure_step must lie inside the pilot");
  if (pilot_seeds < 1) throw ConfigError("calibration.pilot_seeds must be at least 1");
  if (!(headroom > 0.0 && headroom <= 1.0)) throw ConfigError("calibration.headroom must lie in (0, 1]");
}

void SuiteConfig::validate() const {
  if (scenarios < 1) throw ConfigError("suite.scenarios must be at least 1");
  if (highly < 0 || highly > scenarios) throw ConfigError("suite.highly must lie in [0, scenarios]");
  if (min_inspected_gbps < 0.0) throw ConfigError("suite.min_inspected_gbps must be non-negative");
  if (min_moderate_change < 0.0 || min_moderate_change > kImpactThreshold)
    throw ConfigError("suite.min_moderate_change must lie in [0, 0.8]");
  if (search_budget < 0) throw ConfigError("suite.search_budget must be non-negative");
}

std::uint64_t ScenarioConfig::traffic_seed() const { return derive_seed(seed, 1); }
std::uint64_t ScenarioConfig::demand_seed() const { return derive_seed(seed, 2); }
std::uint64_t ScenarioConfig::model_seed() const { return derive_seed(seed, 3); }

TrafficModelConfig ScenarioConfig::traffic_config() const {
  TrafficModelConfig t = traffic;
  t.seed = traffic_seed();
  return t;
}

void ScenarioConfig::validate(bool require_failure) const {
  traffic.validate();
  forecaster.validate();
  calibration.validate();
  suite.validate();
  if (sim.slices < kSlicesPerChannel) throw ConfigError("sim.slices must hold at least one channel");
  if (sim.k_paths < 1) throw ConfigError("sim.k_paths must be at least 1");
  if (incremental_windows.empty()) throw ConfigError("incremental_windows must not be empty");
  for (int w : incremental_windows)
    if (w < 1) throw ConfigError("incremental_windows entries must be at least 1");
  if (std::set<int>(incremental_windows.begin(), incremental_windows.end()).size() != incremental_windows.size())
    throw ConfigError("incremental_windows entries must be distinct");
  if (tconv.empty()) throw ConfigError("tconv must list at least one (th, x)");
  for (const auto& c : tconv) {
    c.validate();
    if (horizon < c.x || tconv_horizon < c.x) throw ConfigError("horizon is shorter than tconv x");
  }
  if (horizon < 0) throw ConfigError("horizon must be non-negative");
  if (tconv_horizon < horizon) throw ConfigError("tconv_horizon must be at least horizon");
  if (!(eps_gbps > 0.0)) throw ConfigError("eps_gbps must be positive");
  if (forecaster.train_steps > traffic.steps) throw ConfigError("forecaster.train_steps exceeds traffic.steps");
  if (!require_failure) return;
  if (!failure) throw ConfigError("failure block is required");
  const auto& f = *failure;
  if (f.failed.empty() || f.inspected.empty()) throw ConfigError("failure.failed and failure.inspected are required");
  if (f.failed == f.inspected) throw ConfigError("failure.failed and failure.inspected must differ");
  if (f.step < forecaster.train_steps + forecaster.history)
    throw ConfigError("failure.step must be at least train_steps + history");
  if (f.step < kImpactWindow) throw ConfigError("failure.step leaves fewer than 50 pre-failure samples");
  const int needed = f.step + std::max({tconv_horizon + 1, horizon + 1, kImpactWindow});
  if (traffic.steps < needed)
    throw ConfigError("traffic.steps must be at least " + std::to_string(needed) +
                      " to cover the post-failure horizon");
}

ScenarioConfig parse_scenario_config(const std::string& text, const std::filesystem::path& base_dir) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  ScenarioConfig c;
  {
    Section s(j, "config");
    s.get("name", c.name);
    std::string topo;
    s.get("topology", topo);
    if (!topo.empty()) {
      c.topology = topo;
      if (c.topology.is_relative() && !base_dir.empty()) c.topology = base_dir / c.topology;
    }
    s.get("dc_count", c.dc_count);
    s.get("dc_nodes", c.dc_nodes);
    s.get("seed", c.seed);
    s.get("incremental_windows", c.incremental_windows);
    s.get("horizon", c.horizon);
    s.get("tconv_horizon", c.tconv_horizon);
    s.get("eps_gbps", c.eps_gbps);
    if (const json* t = s.child("traffic")) parse_traffic(*t, c.traffic);
    if (const json* sim = s.child("sim")) {
      Section ss(*sim, "sim");
      ss.get("slices", c.sim.slices);
      ss.get("k_paths", c.sim.k_paths);
    }
    if (const json* f = s.child("failure")) {
      if (!f->is_null()) {
        Section fs(*f, "failure");
        FailureSpec spec;
        fs.get("failed", spec.failed);
        fs.get("inspected", spec.inspected);
        fs.get("step", spec.step);
        c.failure = spec;
      }
    }
    if (const json* f = s.child("forecaster")) parse_forecaster(*f, c.forecaster);
    if (const json* tc = s.child("tconv")) {
      if (!tc->is_array()) throw ConfigError("tconv: expected an array");
      c.tconv.clear();
      for (const auto& e : *tc) {
        Section es(e, "tconv[]");
        TConvConfig t;
        es.get("th", t.th);
        es.get("x", t.x);
        c.tconv.push_back(t);
      }
    }
    if (const json* a = s.child("artifacts")) {
      Section as(*a, "artifacts");
      as.get("pair_series", c.artifacts.pair_series);
      as.get("event_log", c.artifacts.event_log);
      as.get("link_loads", c.artifacts.link_loads);
      as.get("predictions", c.artifacts.predictions);
      as.get("checkpoints", c.artifacts.checkpoints);
    }
    if (const json* cal = s.child("calibration")) {
      Section cs(*cal, "calibration");
      cs.get("floor_tbps", c.calibration.floor_tbps);
      cs.get("ceiling_tbps", c.calibration.ceiling_tbps);
      cs.get("iterations", c.calibration.iterations);
      cs.get("pilot_steps", c.calibration.pilot_steps);
      cs.get("pilot_failure_step", c.calibration.pilot_failure_step);
      cs.get("pilot_seeds", c.calibration.pilot_seeds);
      cs.get("headroom", c.calibration.headroom);
    }
    if (const json* su = s.child("suite")) {
      Section ss(*su, "suite");
      ss.get("scenarios", c.suite.scenarios);
      ss.get("highly", c.suite.highly);
      ss.get("min_inspected_gbps", c.suite.min_inspected_gbps);
      ss.get("min_moderate_change", c.suite.min_moderate_change);
      ss.get("search_budget", c.suite.search_budget);
    }
  }
  return c;
}

ScenarioConfig load_scenario_config(const std::filesystem::path& path) {
  return parse_scenario_config(read_text_file(path), path.parent_path());
}

std::string scenario_config_to_json(const ScenarioConfig& c) {
  json j;
  j["name"] = c.name;
  j["topology"] = c.topology.string();
  j["dc_count"] = c.dc_count;
  j["dc_nodes"] = c.dc_nodes;
  j["seed"] = c.seed;
  const auto& t = c.traffic;
  j["traffic"] = {{"steps", t.steps}, {"total_load_tbps", t.total_load_tbps}, {"period", t.period},
                  {"amplitude_fraction", t.amplitude_fraction}, {"type_share", t.type_share},
                  {"period_scale", t.period_scale}, {"phase_jitter", t.phase_jitter}};
  j["sim"] = {{"slices", c.sim.slices}, {"k_paths", c.sim.k_paths}};
  if (c.failure)
    j["failure"] = {{"failed", c.failure->failed}, {"inspected", c.failure->inspected}, {"step", c.failure->step}};
  else
    j["failure"] = nullptr;
  const auto& f = c.forecaster;
  j["forecaster"] = {{"history", f.history}, {"train_steps", f.train_steps}, {"epochs", f.epochs},
                     {"learning_rate", f.learning_rate}, {"lr_decay", f.lr_decay},
                     {"lr_decay_every", f.lr_decay_every}, {"clip_norm", f.clip_norm},
                     {"batch_size", f.batch_size}, {"partial_fit_epochs", f.partial_fit_epochs},
                     {"partial_fit_learning_rate", f.partial_fit_learning_rate}};
  j["incremental_windows"] = c.incremental_windows;
  j["tconv"] = json::array();
  for (const auto& tc : c.tconv) j["tconv"].push_back({{"th", tc.th}, {"x", tc.x}});
  j["horizon"] = c.horizon;
  j["tconv_horizon"] = c.tconv_horizon;
  j["eps_gbps"] = c.eps_gbps;
  const auto& a = c.artifacts;
  j["artifacts"] = {{"pair_series", a.pair_series}, {"event_log", a.event_log}, {"link_loads", a.link_loads},
                    {"predictions", a.predictions}, {"checkpoints", a.checkpoints}};
  const auto& cal = c.calibration;
  j["calibration"] = {{"floor_tbps", cal.floor_tbps}, {"ceiling_tbps", cal.ceiling_tbps},
                      {"iterations", cal.iterations}, {"pilot_steps", cal.pilot_steps},
                      {"pilot_failure_step", cal.pilot_failure_step}, {"pilot_seeds", cal.pilot_seeds},
                      {"headroom", cal.headroom}};
  const auto& s = c.suite;
  j["suite"] = {{"scenarios", s.scenarios}, {"highly", s.highly}, {"min_inspected_gbps", s.min_inspected_gbps},
                {"min_moderate_change", s.min_moderate_change}, {"search_budget", s.search_budget}};
  return j.dump(2) + "\n";
}

std::filesystem::path default_topology_path() {
  if (const char* env = std::getenv("LINKDRIFT_DATA_DIR")) return std::filesystem::path(env) / "euro28.json";
  const std::filesystem::path src = std::filesystem::path(LINKDRIFT_SOURCE_DATA_DIR) / "euro28.json";
  if (std::filesystem::exists(src)) return src;
  return std::filesystem::path(LINKDRIFT_INSTALL_DATA_DIR) / "euro28.json";
}

Topology load_scenario_topology(const ScenarioConfig& cfg) {
  DcPlacement placement;
  placement.count = cfg.dc_count;
  placement.explicit_nodes = cfg.dc_nodes;
  return load_topology_file(cfg.topology.empty() ? default_topology_path() : cfg.topology, placement);
}

}  // namespace linkdrift
