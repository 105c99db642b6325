#include "linkdrift/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "linkdrift/errors.hpp"
#include "linkdrift/io.hpp"
#include "linkdrift/rng.hpp"

namespace linkdrift {

namespace {

template <class F>
auto run_stage(const char* name, F&& f) {
  try {
    return f();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
}

std::shared_ptr<const TrafficModel> make_traffic(const Topology& t, const ScenarioConfig& cfg) {
  if (!(cfg.traffic.total_load_tbps > 0.0))
    throw ConfigError("traffic.total_load_tbps is 0; run calibration first");
  return std::make_shared<const TrafficModel>(t, cfg.traffic_config());
}

std::uint64_t hash_window(std::uint64_t h, std::span<const double> recent, double actual) {
  h = fnv1a(recent.data(), recent.size_bytes(), h);
  return fnv1a(&actual, sizeof actual, h);
}

std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, v >>= 4) s[static_cast<std::size_t>(i)] = digits[v & 0xF];
  return s;
}

}  // namespace

std::string incremental_approach_name(int retrain_window) {
  return "Incremental-" + std::to_string(retrain_window);
}

std::uint64_t pilot_seed(std::uint64_t seed, int index) {
  return derive_seed(seed, 0xCA11B, static_cast<std::uint64_t>(index));
}

std::optional<LinkId> worst_case_link(const Topology& t, std::span<const double> loads) {
  std::optional<LinkId> best;
  for (LinkId l = 0; l < t.link_count(); ++l) {
    if (best && loads[l] <= loads[*best]) continue;
    if (!t.strongly_connected({l})) continue;
    best = l;
  }
  return best;
}

PilotOutcome run_pilot(std::shared_ptr<const Topology> topology, const ScenarioConfig& cfg, double tbps,
                       int steps, int failure_step, bool stop_on_block) {
  ScenarioConfig c = cfg;
  c.traffic.total_load_tbps = tbps;
  auto traffic = make_traffic(*topology, c);
  Simulation sim(topology, traffic, c.sim, c.demand_seed());
  sim.state().set_keep_event_log(false);
  PilotOutcome out;
  for (int s = 0; s < steps; ++s) {
    std::optional<LinkId> fail;
    if (s == failure_step) {
      fail = worst_case_link(*topology, sim.state().link_loads());
      out.failed_link = fail;
    }
    sim.step(fail);
    const auto& k = sim.state().counters();
    out.rejected = k.rejected;
    out.rejected_before_failure = k.rejected_before_failure;
    out.restoration_rejected = k.restoration_rejected;
    out.steps_run = s + 1;
    if (stop_on_block && !out.clean()) break;
  }
  return out;
}

CalibrationResult calibrate_load(std::shared_ptr<const Topology> topology, const ScenarioConfig& cfg) {
  const auto& cal = cfg.calibration;
  cal.validate();
  if (!topology->strongly_connected())
    throw TopologyError("restoration pilot: topology is not strongly connected");
  CalibrationResult result;
  auto feasible = [&](double tbps) {
    bool ok = true;
    for (int i = 0; i < cal.pilot_seeds && ok; ++i) {
      ScenarioConfig c = cfg;
      c.seed = pilot_seed(cfg.seed, i);
      ok = run_pilot(topology, c, tbps, cal.pilot_steps, cal.pilot_failure_step, true).clean();
    }
    result.probes.push_back({tbps, ok});
    return ok;
  };
  if (!feasible(cal.floor_tbps))
    throw Error("calibration: no blocking-free load at or above the floor of " + format_double(cal.floor_tbps) +
                " Tbps");
  double lo = cal.floor_tbps;
  double hi = cal.ceiling_tbps;
  if (feasible(hi)) {
    lo = hi;
  } else {
    for (int it = 0; it < cal.iterations; ++it) {
      const double mid = 0.5 * (lo + hi);
      (feasible(mid) ? lo : hi) = mid;
    }
  }
  result.largest_feasible_tbps = lo;
  result.total_load_tbps = std::max(cal.floor_tbps, lo * cal.headroom);
  return result;
}

SimulationOutput simulate_scenario(std::shared_ptr<const Topology> topology, const ScenarioConfig& cfg,
                                   bool keep_events, bool check_invariants) {
  auto traffic = make_traffic(*topology, cfg);
  Simulation sim(topology, traffic, cfg.sim, cfg.demand_seed());
  sim.state().set_keep_event_log(keep_events);
  sim.set_check_invariants(check_invariants);
  std::optional<std::pair<int, LinkId>> failure;
  if (cfg.failure) failure = std::make_pair(cfg.failure->step, topology->link_id(cfg.failure->failed));
  sim.run_until(cfg.traffic.steps, failure);
  SimulationOutput out;
  out.link_history = sim.link_history();
  out.events = sim.state().events();
  out.counters = sim.state().counters();
  out.violations = sim.violations();
  return out;
}

TrainedModels train_models(std::span<const double> series, const ScenarioConfig& cfg) {
  ForecasterConfig fc = cfg.forecaster;
  fc.seed = cfg.model_seed();
  TrainedModels m;
  m.ltc_mse = m.ltc.train(series, fc);
  m.mlp_mse = m.mlp.initial_fit(series, fc);
  return m;
}

StreamOutput stream_forecasts(std::span<const double> series, TrainedModels models, const ScenarioConfig& cfg) {
  const int p = cfg.forecaster.history;
  const int first = cfg.forecaster.train_steps;
  const int fail = cfg.failure ? cfg.failure->step : static_cast<int>(series.size());
  StreamOutput out;
  out.first_step = first;
  out.approaches.push_back(kLtcApproach);
  std::vector<IncrementalMlp> variants;
  for (int w : cfg.incremental_windows) {
    out.approaches.push_back(incremental_approach_name(w));
    variants.push_back(models.mlp);
    variants.back().set_retrain_window(w);
  }
  const std::size_t n = out.approaches.size();
  out.predictions.assign(n, {});
  out.stream_hashes.assign(n, 0xCBF29CE484222325ULL);
  out.post_failure_refits.assign(n, 0);
  for (int t = first; t < static_cast<int>(series.size()); ++t) {
    const auto recent = series.subspan(static_cast<std::size_t>(t - p), static_cast<std::size_t>(p));
    const double actual = series[static_cast<std::size_t>(t)];
    out.predictions[0].push_back(models.ltc.predict_online(recent));
    out.stream_hashes[0] = hash_window(out.stream_hashes[0], recent, actual);
    const bool counted = t >= fail && t < fail + cfg.horizon;
    for (std::size_t v = 0; v < variants.size(); ++v) {
      const double y = variants[v].predict(recent);
      const bool refit = variants[v].observe(recent, actual);
      out.predictions[v + 1].push_back(y);
      out.stream_hashes[v + 1] = hash_window(out.stream_hashes[v + 1], recent, actual);
      if (refit && counted) ++out.post_failure_refits[v + 1];
    }
  }
  return out;
}

ScenarioResult evaluate_stream(std::span<const double> series, const StreamOutput& stream, const ScenarioConfig& cfg) {
  if (!cfg.failure) throw ConfigError("evaluation needs a failure block");
  for (auto h : stream.stream_hashes)
    if (h != stream.stream_hashes.front()) throw Error("forecasters consumed different observation streams");
  const int fail = cfg.failure->step;
  const auto post = static_cast<std::size_t>(cfg.tconv_horizon) + 1;
  if (series.size() < static_cast<std::size_t>(fail) + post)
    throw PreconditionError("series does not cover the post-failure horizon");

  ScenarioResult r;
  r.report.scenario = cfg.name;
  r.failed = cfg.failure->failed;
  r.inspected = cfg.failure->inspected;
  r.failure_step = fail;
  r.total_load_tbps = cfg.traffic.total_load_tbps;
  r.seed = cfg.seed;
  r.horizon = cfg.horizon;
  r.stream_hash = hex64(stream.stream_hashes.front());
  r.report.impact = classify_impact(series, fail, cfg.eps_gbps);

  const auto actual_post = series.subspan(static_cast<std::size_t>(fail), post);
  const auto warm_len = static_cast<std::size_t>(fail - stream.first_step);
  const auto actual_warm = series.subspan(static_cast<std::size_t>(stream.first_step), warm_len);
  for (std::size_t a = 0; a < stream.approaches.size(); ++a) {
    const auto& pred = stream.predictions[a];
    const auto pred_post = std::span<const double>(pred).subspan(warm_len, post);
    r.report.approaches.push_back(evaluate_approach(stream.approaches[a], pred_post, actual_post, cfg.horizon,
                                                    cfg.tconv, cfg.tconv_horizon, cfg.eps_gbps));
    if (warm_len > 0)
      r.warm_mape[stream.approaches[a]] =
          mape(std::span<const double>(pred).first(warm_len), actual_warm, cfg.eps_gbps);
    if (a > 0) r.post_failure_refits[stream.approaches[a]] = stream.post_failure_refits[a];
  }
  return r;
}

ScenarioResult run_scenario(const ScenarioConfig& cfg, const std::optional<std::filesystem::path>& out_dir,
                            std::shared_ptr<const Topology> topology) {
  run_stage("config", [&] {
    cfg.validate(true);
    return 0;
  });
  if (!topology)
    topology = run_stage("topology", [&] { return std::make_shared<const Topology>(load_scenario_topology(cfg)); });
  const auto [failed, inspected] = run_stage("config", [&] {
    return std::make_pair(topology->link_id(cfg.failure->failed), topology->link_id(cfg.failure->inspected));
  });
  const bool keep_events = out_dir && cfg.artifacts.event_log;
  const auto sim = run_stage("simulate", [&] { return simulate_scenario(topology, cfg, keep_events); });
  const std::vector<double>& series = sim.link_history[inspected];
  const auto models = run_stage("train", [&] { return train_models(series, cfg); });
  const auto stream = run_stage("stream", [&] { return stream_forecasts(series, models, cfg); });
  ScenarioResult result = run_stage("evaluate", [&] { return evaluate_stream(series, stream, cfg); });
  result.counters = sim.counters;
  result.train_mse[kLtcApproach] = models.ltc_mse;
  for (int w : cfg.incremental_windows) result.train_mse[incremental_approach_name(w)] = models.mlp_mse;

  if (!out_dir) return result;
  run_stage("artifacts", [&] {
    const auto dir = *out_dir / cfg.name;
    write_text_file(dir / "config.json", scenario_config_to_json(cfg));
    if (cfg.artifacts.link_loads) {
      std::ostringstream os;
      write_link_loads_csv(os, *topology, sim.link_history, {failed, inspected});
      write_text_file(dir / "link_loads.csv", os.str());
    }
    if (cfg.artifacts.event_log) {
      std::ostringstream os;
      write_event_log_csv(os, *topology, sim.events);
      write_text_file(dir / "events.csv", os.str());
    }
    if (cfg.artifacts.pair_series) {
      std::ostringstream os;
      write_pair_series_csv(os, *topology, generate_pair_series(*topology, cfg.traffic_config()));
      write_text_file(dir / "pair_series.csv", os.str());
    }
    if (cfg.artifacts.predictions) {
      std::string csv = "step,actual";
      for (const auto& a : stream.approaches) csv += "," + a;
      csv += "\n";
      for (std::size_t i = 0; i < stream.predictions[0].size(); ++i) {
        const auto step = static_cast<std::size_t>(stream.first_step) + i;
        csv += std::to_string(step) + "," + format_double(series[step]);
        for (const auto& p : stream.predictions) csv += "," + format_double(p[i]);
        csv += "\n";
      }
      write_text_file(dir / "predictions.csv", csv);
    }
    if (cfg.artifacts.checkpoints) {
      write_text_file(dir / "checkpoints" / "ltc.json", models.ltc.to_checkpoint());
      write_text_file(dir / "checkpoints" / "mlp.json", models.mlp.to_checkpoint());
    }
    write_scenario_report(result, dir);
    return 0;
  });
  return result;
}

std::vector<ScenarioConfig> scenario_suite(std::shared_ptr<const Topology> topology, const ScenarioConfig& base) {
  base.validate(false);
  const auto& sc = base.suite;
  const int fail_step = base.failure ? base.failure->step : FailureSpec{}.step;
  ScenarioConfig probe = base;
  probe.failure = FailureSpec{"", "", fail_step};

  auto traffic = make_traffic(*topology, base);
  Simulation prefix(topology, traffic, base.sim, base.demand_seed());
  prefix.state().set_keep_event_log(false);
  prefix.run_until(fail_step);

  std::vector<LinkId> candidates;
  for (LinkId l = 0; l < topology->link_count(); ++l)
    if (topology->strongly_connected({l})) candidates.push_back(l);
  Rng rng(derive_seed(base.seed, 0x5EA2C4));
  for (std::size_t i = candidates.size(); i > 1; --i)
    std::swap(candidates[i - 1], candidates[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i - 1)))]);
  const std::size_t budget =
      sc.search_budget > 0 ? std::min(candidates.size(), static_cast<std::size_t>(sc.search_budget)) : candidates.size();

  int need_high = sc.highly;
  int need_mod = sc.scenarios - sc.highly;
  std::vector<ScenarioConfig> out;
  for (std::size_t c = 0; c < budget && (need_high > 0 || need_mod > 0); ++c) {
    const LinkId failed = candidates[c];
    Simulation fork = prefix;
    fork.step(failed);
    fork.run_until(fail_step + kImpactWindow);
    std::optional<ScenarioCandidate> best_high, best_mod;
    double high_load = -1.0, mod_load = -1.0;
    for (LinkId l = 0; l < topology->link_count(); ++l) {
      if (l == failed) continue;
      const auto impact = classify_impact(fork.link_history()[l], fail_step, base.eps_gbps);
      if (impact.mean_pre < sc.min_inspected_gbps) continue;
      if (impact.cls == ImpactClass::Highly && impact.mean_pre > high_load) {
        high_load = impact.mean_pre;
        best_high = ScenarioCandidate{failed, l, impact};
      } else if (impact.cls == ImpactClass::Moderately && impact.change >= sc.min_moderate_change &&
                 impact.mean_pre > mod_load) {
        mod_load = impact.mean_pre;
        best_mod = ScenarioCandidate{failed, l, impact};
      }
    }
    std::optional<ScenarioCandidate> pick;
    if (need_high > 0 && best_high) {
      pick = best_high;
      --need_high;
    } else if (need_mod > 0 && best_mod) {
      pick = best_mod;
      --need_mod;
    }
    if (!pick) continue;
    ScenarioConfig s = base;
    char name[32];
    std::snprintf(name, sizeof name, "scenario-%02zu", out.size() + 1);
    s.name = name;
    s.failure = FailureSpec{topology->link(pick->failed).key, topology->link(pick->inspected).key, fail_step};
    out.push_back(std::move(s));
  }
  if (need_high > 0 || need_mod > 0)
    throw Error("scenario search budget exhausted after " + std::to_string(budget) + " candidate links: missing " +
                std::to_string(need_high) + " highly and " + std::to_string(need_mod) +
                " moderately impacted scenarios");
  return out;
}

std::vector<ScenarioResult> run_suite(const ScenarioConfig& base, const std::filesystem::path& out_dir) {
  auto topology =
      run_stage("topology", [&] { return std::make_shared<const Topology>(load_scenario_topology(base)); });
  ScenarioConfig cfg = base;
  if (!(cfg.traffic.total_load_tbps > 0.0)) {
    const auto cal = run_stage("calibrate", [&] { return calibrate_load(topology, cfg); });
    cfg.traffic.total_load_tbps = cal.total_load_tbps;
  }
  const auto scenarios = run_stage("suite", [&] { return scenario_suite(topology, cfg); });
  std::vector<ScenarioResult> results;
  for (const auto& s : scenarios) results.push_back(run_scenario(s, out_dir, topology));
  run_stage("report", [&] {
    emit_report(results, out_dir);
    return 0;
  });
  return results;
}

std::vector<double> read_link_series_csv(const std::filesystem::path& path, const std::string& link_key) {
  std::istringstream in(read_text_file(path));
  std::string line;
  if (!std::getline(in, line) || line != "link,step,gbps")
    throw Error(path.string() + ": expected header link,step,gbps");
  std::vector<double> out;
  while (std::getline(in, line)) {
    const auto c1 = line.find(',');
    const auto c2 = line.find(',', c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos) throw Error(path.string() + ": malformed row");
    if (line.compare(0, c1, link_key) != 0 || c1 != link_key.size()) continue;
    const auto step = std::stoul(line.substr(c1 + 1, c2 - c1 - 1));
    if (step != out.size()) throw Error(path.string() + ": steps for " + link_key + " are not contiguous");
    out.push_back(std::stod(line.substr(c2 + 1)));
  }
  if (out.empty()) throw Error(path.string() + ": no rows for link " + link_key);
  return out;
}

}  // namespace linkdrift
