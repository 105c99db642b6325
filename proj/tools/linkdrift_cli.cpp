// linkdrift command line: calibrate, gen-traffic, simulate, train, evaluate,
// suite and report.

#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "linkdrift/errors.hpp"
#include "linkdrift/harness.hpp"
#include "linkdrift/io.hpp"
#include "linkdrift/report.hpp"
#include "linkdrift/scenario.hpp"

namespace fs = std::filesystem;
using namespace linkdrift;

namespace {

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = "out";
};

ScenarioConfig load_config(const Globals& g) {
  ScenarioConfig cfg = g.config.empty() ? ScenarioConfig{} : load_scenario_config(g.config);
  if (g.seed) cfg.seed = *g.seed;
  return cfg;
}

std::shared_ptr<const Topology> load_topo(const ScenarioConfig& cfg) {
  return std::make_shared<const Topology>(load_scenario_topology(cfg));
}

// Calibrates in place when the config leaves the load at 0.
void ensure_load(ScenarioConfig& cfg, const std::shared_ptr<const Topology>& topo) {
  if (cfg.traffic.total_load_tbps > 0.0) return;
  std::cerr << "calibrating total load...\n";
  cfg.traffic.total_load_tbps = calibrate_load(topo, cfg).total_load_tbps;
  std::cerr << "total load " << format_double(cfg.traffic.total_load_tbps) << " Tbps\n";
}

std::string counters_json(const SimCounters& k) {
  std::ostringstream os;
  os << "{\n \"allocated\": " << k.allocated << ",\n \"rejected\": " << k.rejected
     << ",\n \"rejected_before_failure\": " << k.rejected_before_failure << ",\n \"expired\": " << k.expired
     << ",\n \"failed_affected\": " << k.failed_affected << ",\n \"restored\": " << k.restored
     << ",\n \"restoration_rejected\": " << k.restoration_rejected << "\n}\n";
  return os.str();
}

int cmd_calibrate(const Globals& g) {
  ScenarioConfig cfg = load_config(g);
  const auto topo = load_topo(cfg);
  const auto r = calibrate_load(topo, cfg);
  std::string j = "{\n \"total_load_tbps\": " + format_double(r.total_load_tbps) +
                  ",\n \"largest_feasible_tbps\": " + format_double(r.largest_feasible_tbps) + ",\n \"probes\": [";
  for (std::size_t i = 0; i < r.probes.size(); ++i)
    j += std::string(i ? "," : "") + "\n  {\"tbps\": " + format_double(r.probes[i].tbps) +
         ", \"feasible\": " + (r.probes[i].feasible ? "true" : "false") + "}";
  j += "\n ]\n}\n";
  write_text_file(fs::path(g.out) / "calibration.json", j);
  std::cout << format_double(r.total_load_tbps) << "\n";
  return 0;
}

int cmd_gen_traffic(const Globals& g) {
  ScenarioConfig cfg = load_config(g);
  const auto topo = load_topo(cfg);
  ensure_load(cfg, topo);
  std::ostringstream os;
  write_pair_series_csv(os, *topo, generate_pair_series(*topo, cfg.traffic_config()));
  write_text_file(fs::path(g.out) / "pair_series.csv", os.str());
  return 0;
}

int cmd_simulate(const Globals& g, bool check) {
  ScenarioConfig cfg = load_config(g);
  const auto topo = load_topo(cfg);
  ensure_load(cfg, topo);
  cfg.validate(false);
  const auto sim = simulate_scenario(topo, cfg, true, check);
  const fs::path out(g.out);
  std::ostringstream ev;
  write_event_log_csv(ev, *topo, sim.events);
  write_text_file(out / "events.csv", ev.str());
  std::vector<LinkId> all(topo->link_count());
  for (LinkId l = 0; l < all.size(); ++l) all[l] = l;
  std::ostringstream ll;
  write_link_loads_csv(ll, *topo, sim.link_history, all);
  write_text_file(out / "link_loads.csv", ll.str());
  write_text_file(out / "counters.json", counters_json(sim.counters));
  write_text_file(out / "config.json", scenario_config_to_json(cfg));
  for (const auto& v : sim.violations) std::cerr << "invariant violation: " << v << "\n";
  return sim.violations.empty() ? 0 : 1;
}

std::vector<double> series_for(ScenarioConfig& cfg, const std::string& series_path,
                               std::string link) {
  if (link.empty()) {
    if (!cfg.failure) throw ConfigError("no --link given and the config has no failure.inspected");
    link = cfg.failure->inspected;
  }
  if (!series_path.empty()) return read_link_series_csv(series_path, link);
  const auto topo = load_topo(cfg);
  ensure_load(cfg, topo);
  cfg.validate(false);
  return simulate_scenario(topo, cfg, false).link_history[topo->link_id(link)];
}

int cmd_train(const Globals& g, const std::string& series_path, const std::string& link) {
  ScenarioConfig cfg = load_config(g);
  const auto series = series_for(cfg, series_path, link);
  const auto m = train_models(series, cfg);
  const fs::path out = fs::path(g.out) / "checkpoints";
  write_text_file(out / "ltc.json", m.ltc.to_checkpoint());
  write_text_file(out / "mlp.json", m.mlp.to_checkpoint());
  std::cout << "ltc_train_mse " << format_double(m.ltc_mse) << "\nmlp_train_mse " << format_double(m.mlp_mse)
            << "\n";
  return 0;
}

int cmd_evaluate(const Globals& g, const std::string& series_path, const std::string& link,
                 const std::string& checkpoints) {
  ScenarioConfig cfg = load_config(g);
  cfg.validate(true);
  const auto series = series_for(cfg, series_path, link);
  TrainedModels m;
  const fs::path ck(checkpoints.empty() ? fs::path(g.out) / "checkpoints" : fs::path(checkpoints));
  m.ltc = LtcModel::from_checkpoint(read_text_file(ck / "ltc.json"));
  m.mlp = IncrementalMlp::from_checkpoint(read_text_file(ck / "mlp.json"));
  m.ltc_mse = m.ltc.final_train_mse();
  const auto stream = stream_forecasts(series, m, cfg);
  auto r = evaluate_stream(series, stream, cfg);
  r.train_mse[kLtcApproach] = m.ltc_mse;
  write_scenario_report(r, fs::path(g.out) / cfg.name);
  std::cout << (fs::path(g.out) / cfg.name).string() << "\n";
  return 0;
}

int cmd_suite(const Globals& g) {
  const ScenarioConfig cfg = load_config(g);
  const auto results = run_suite(cfg, g.out);
  for (const auto& r : results)
    std::cout << r.report.scenario << " " << r.failed << " -> " << r.inspected << " "
              << to_string(r.report.impact.cls) << "\n";
  return 0;
}

int cmd_report(const Globals& g, const std::string& in) {
  const auto results = load_results(in.empty() ? fs::path(g.out) : fs::path(in));
  emit_report(results, g.out);
  std::cout << results.size() << " scenarios\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Link-load drift experiments on a simulated elastic optical network"};
  app.require_subcommand(1);
  Globals g;
  std::uint64_t seed = 0;
  app.add_option("--config", g.config, "Scenario config (JSON)")->check(CLI::ExistingFile);
  auto* seed_opt = app.add_option("--seed", seed, "Master seed (overrides the config)");
  app.add_option("--out", g.out, "Output directory")->capture_default_str();

  auto* calibrate = app.add_subcommand("calibrate", "Calibrate the blocking-free total load");
  auto* gen = app.add_subcommand("gen-traffic", "Write the per-pair traffic series");
  auto* simulate = app.add_subcommand("simulate", "Run the network simulation");
  bool check = false;
  simulate->add_flag("--check-invariants", check, "Verify spectrum invariants after every step");
  auto* train = app.add_subcommand("train", "Train the forecasters on one link's load");
  std::string series_path, link, checkpoints, report_in;
  for (auto* sub : {train, app.add_subcommand("evaluate", "Stream and score trained forecasters")}) {
    sub->add_option("--series", series_path, "link,step,gbps CSV (simulates when omitted)");
    sub->add_option("--link", link, "Link key (defaults to failure.inspected)");
  }
  auto* evaluate = app.get_subcommand("evaluate");
  evaluate->add_option("--checkpoints", checkpoints, "Directory with ltc.json and mlp.json");
  auto* suite = app.add_subcommand("suite", "Search scenarios, run them all and write the report");
  auto* report = app.add_subcommand("report", "Rebuild aggregate tables from scenario reports");
  report->add_option("--in", report_in, "Directory holding scenario subdirectories");

  CLI11_PARSE(app, argc, argv);
  if (seed_opt->count()) g.seed = seed;

  try {
    if (*calibrate) return cmd_calibrate(g);
    if (*gen) return cmd_gen_traffic(g);
    if (*simulate) return cmd_simulate(g, check);
    if (*train) return cmd_train(g, series_path, link);
    if (*evaluate) return cmd_evaluate(g, series_path, link, checkpoints);
    if (*suite) return cmd_suite(g);
    if (*report) return cmd_report(g, report_in);
  } catch (const StageError& e) {
    std::cerr << "error in stage " << e.stage() << ": " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
