#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "linkdrift/errors.hpp"
#include "linkdrift/harness.hpp"
#include "linkdrift/io.hpp"
#include "support.hpp"

using namespace linkdrift;
using linkdrift::testing::bidirectional;
using linkdrift::testing::make_topology;
using linkdrift::testing::share;
namespace fs = std::filesystem;

namespace {

ScenarioConfig small_config() {
  ScenarioConfig c;
  c.name = "small";
  c.traffic.steps = 460;
  c.traffic.total_load_tbps = 1.5;
  c.forecaster.train_steps = 200;
  c.forecaster.epochs = 2;
  c.forecaster.lr_decay_every = 1;
  c.failure = FailureSpec{"FRA-MUC", "MUC-VIE", 300};
  c.seed = 5;
  return c;
}

std::shared_ptr<const Topology> euro28() { return share(load_topology_file(default_topology_path())); }

std::shared_ptr<const Topology> toy() {
  return share(make_topology({"A", "B"}, bidirectional({{"A", "B", 300}}), {"A", "B"}));
}

ScenarioConfig toy_config(int slices) {
  ScenarioConfig c;
  c.sim.slices = slices;
  c.traffic.steps = 200;
  c.calibration.floor_tbps = 0.01;
  c.calibration.ceiling_tbps = 2.0;
  c.calibration.pilot_steps = 200;
  c.calibration.pilot_failure_step = 150;
  c.calibration.iterations = 8;
  return c;
}

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("linkdrift_harness_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) { return read_text_file(p); }

}  // namespace

TEST(ScenarioConfig, ValidationErrors) {
  auto c = small_config();
  EXPECT_NO_THROW(c.validate());
  c.horizon = 4;
  EXPECT_THROW(c.validate(), ConfigError);
  c = small_config();
  c.failure->inspected = c.failure->failed;
  EXPECT_THROW(c.validate(), ConfigError);
  c = small_config();
  c.failure->step = c.forecaster.train_steps + c.forecaster.history - 1;
  EXPECT_THROW(c.validate(), ConfigError);
  c = small_config();
  c.traffic.steps = 400;
  EXPECT_THROW(c.validate(), ConfigError);
  c = small_config();
  c.failure.reset();
  EXPECT_THROW(c.validate(), ConfigError);
  EXPECT_NO_THROW(c.validate(false));
}

TEST(ScenarioConfig, ParsingIsStrictAndRoundTrips) {
  EXPECT_THROW(parse_scenario_config(R"({"traffic": {"stepz": 10}})"), ConfigError);
  EXPECT_THROW(parse_scenario_config(R"({"colour": 1})"), ConfigError);
  EXPECT_THROW(parse_scenario_config("not json"), ConfigError);
  const auto c = parse_scenario_config(R"({"seed": 9, "horizon": 60, "incremental_windows": [5, 20, 40],
      "failure": {"failed": "A-B", "inspected": "B-C", "step": 6200}})");
  EXPECT_EQ(c.seed, 9u);
  EXPECT_EQ(c.horizon, 60);
  EXPECT_EQ(c.incremental_windows, (std::vector<int>{5, 20, 40}));
  ASSERT_TRUE(c.failure);
  EXPECT_EQ(c.failure->step, 6200);
  const auto again = parse_scenario_config(scenario_config_to_json(c));
  EXPECT_EQ(scenario_config_to_json(again), scenario_config_to_json(c));
}

TEST(ScenarioConfig, SeedsAreDistinct) {
  ScenarioConfig c;
  EXPECT_NE(c.traffic_seed(), c.demand_seed());
  EXPECT_NE(c.demand_seed(), c.model_seed());
  EXPECT_EQ(c.traffic_config().seed, c.traffic_seed());
}

TEST(Calibration, ToyLinkIsBlockingFree) {
  const auto t = toy();
  const auto cfg = toy_config(6);
  const auto r = calibrate_load(t, cfg);
  EXPECT_GE(r.total_load_tbps, cfg.calibration.floor_tbps);
  EXPECT_LE(r.total_load_tbps, r.largest_feasible_tbps);
  // A 6-slice fiber carries at most two 200 Gbps channels per direction.
  EXPECT_LE(r.largest_feasible_tbps, 0.8);
  for (int i = 0; i < cfg.calibration.pilot_seeds; ++i) {
    auto pc = cfg;
    pc.seed = pilot_seed(cfg.seed, i);
    const auto p = run_pilot(t, pc, r.total_load_tbps, cfg.calibration.pilot_steps,
                             cfg.calibration.pilot_failure_step, false);
    EXPECT_TRUE(p.clean()) << "pilot " << i;
    EXPECT_FALSE(p.failed_link);  // no survivable link on a single fiber
  }
}

TEST(Calibration, MoreSpectrumNeverLowersTheLoad) {
  const double b6 = calibrate_load(toy(), toy_config(6)).largest_feasible_tbps;
  const double b12 = calibrate_load(toy(), toy_config(12)).largest_feasible_tbps;
  EXPECT_GE(b12, b6);
}

TEST(Calibration, Errors) {
  auto disconnected = share(make_topology({"A", "B", "C"}, bidirectional({{"A", "B", 100}}), {"A", "B"}));
  EXPECT_THROW(calibrate_load(disconnected, toy_config(6)), TopologyError);
  auto c = toy_config(6);
  c.calibration.floor_tbps = 1.9;
  EXPECT_THROW(calibrate_load(toy(), c), Error);
}

TEST(Calibration, WorstCaseLinkKeepsConnectivity) {
  const auto t = euro28();
  std::vector<double> loads(t->link_count(), 1.0);
  loads[t->link_id("LON-PAR")] = 500.0;
  EXPECT_EQ(worst_case_link(*t, loads), t->link_id("LON-PAR"));
  const auto line = make_topology({"A", "B"}, bidirectional({{"A", "B", 10}}), {"A", "B"});
  EXPECT_FALSE(worst_case_link(line, std::vector<double>{5.0, 1.0}));
}

TEST(ScenarioSuite, SingleScenario) {
  auto c = small_config();
  c.suite.scenarios = 1;
  c.suite.highly = 0;
  const auto suite = scenario_suite(euro28(), c);
  ASSERT_EQ(suite.size(), 1u);
  EXPECT_NO_THROW(suite[0].validate());
  EXPECT_EQ(suite[0].failure->step, 300);
  EXPECT_NE(suite[0].failure->failed, suite[0].failure->inspected);
}

TEST(ScenarioSuite, ImpossibleMixExhaustsBudget) {
  auto c = toy_config(320);
  c.traffic.total_load_tbps = 0.2;
  c.traffic.steps = 460;
  c.forecaster.train_steps = 250;
  c.failure = FailureSpec{"A-B", "B-A", 300};
  EXPECT_THROW(scenario_suite(toy(), c), Error);
}

TEST(RunScenario, DeterministicArtifactsAndConsistentStreams) {
  const auto t = euro28();
  const auto c = small_config();
  const auto a_dir = scratch("a"), b_dir = scratch("b");
  const auto a = run_scenario(c, a_dir, t);
  const auto b = run_scenario(c, b_dir, t);
  for (const char* f : {"curves.csv", "tconv.csv", "report.json", "predictions.csv", "link_loads.csv", "events.csv",
                        "config.json", "checkpoints/ltc.json", "checkpoints/mlp.json"})
    EXPECT_EQ(slurp(a_dir / "small" / f), slurp(b_dir / "small" / f)) << f;
  EXPECT_EQ(a.stream_hash, b.stream_hash);
  ASSERT_EQ(a.report.approaches.size(), 3u);
  EXPECT_EQ(a.report.approaches[0].approach, "LNN");
  EXPECT_EQ(a.report.approaches[1].approach, "Incremental-5");
  EXPECT_EQ(a.report.approaches[2].approach, "Incremental-20");
  EXPECT_EQ(a.post_failure_refits.at("Incremental-5"), 10u);
  EXPECT_EQ(a.post_failure_refits.at("Incremental-20"), 2u);
  for (const auto& ap : a.report.approaches) {
    EXPECT_EQ(ap.curves.rmse.size(), 51u);
    EXPECT_EQ(ap.tconv.size(), 2u);
  }
  fs::remove_all(a_dir);
  fs::remove_all(b_dir);
}

TEST(RunScenario, StageErrorsNameTheStage) {
  auto c = small_config();
  c.failure->failed = "XXX-YYY";
  try {
    run_scenario(c, std::nullopt, euro28());
    FAIL() << "expected a stage error";
  } catch (const StageError& e) {
    EXPECT_FALSE(e.stage().empty());
  }
  c = small_config();
  c.horizon = 2;
  EXPECT_THROW(run_scenario(c, std::nullopt, euro28()), StageError);
}

namespace {

ScenarioResult fake_result(const std::string& name, ImpactClass cls, double offset) {
  ScenarioResult r;
  r.report.scenario = name;
  r.report.impact.cls = cls;
  for (const char* ap : {"LNN", "Incremental-5", "Incremental-20"}) {
    ApproachResult a;
    a.approach = ap;
    for (int t = 0; t <= 50; ++t) {
      a.curves.rmse.push_back(offset + t);
      a.curves.mape.push_back(2 * offset + t);
    }
    a.tconv[{10.0, 5}] = static_cast<int>(offset);
    a.tconv[{15.0, 5}] = std::nullopt;
    r.report.approaches.push_back(a);
  }
  return r;
}

}  // namespace

TEST(EmitReport, EmptyListIsAnError) {
  EXPECT_THROW(emit_report({}, scratch("empty")), PreconditionError);
}

TEST(EmitReport, SingleScenarioAggregateIsItsCurve) {
  const auto r = fake_result("s1", ImpactClass::Highly, 3.0);
  const auto agg = aggregate_class_curves({r});
  ASSERT_EQ(agg.size(), 3u);
  const auto& lnn = agg.at({"highly", "LNN"});
  EXPECT_EQ(lnn.members, 1u);
  EXPECT_EQ(lnn.curves.rmse, r.report.approaches[0].curves.rmse);
  EXPECT_EQ(lnn.curves.mape, r.report.approaches[0].curves.mape);
}

TEST(EmitReport, AggregateIsPointwiseClassMean) {
  std::vector<ScenarioResult> rs;
  for (int i = 0; i < 10; ++i)
    rs.push_back(fake_result("scenario-" + std::to_string(i), i % 2 ? ImpactClass::Moderately : ImpactClass::Highly,
                             static_cast<double>(i)));
  const auto agg = aggregate_class_curves(rs);
  const auto& hi = agg.at({"highly", "Incremental-5"});
  EXPECT_EQ(hi.members, 5u);
  for (int t = 0; t <= 50; ++t) {
    double sum = 0.0;
    for (int i = 0; i < 10; i += 2) sum += rs[static_cast<std::size_t>(i)].report.approaches[1].curves.rmse[static_cast<std::size_t>(t)];
    EXPECT_NEAR(hi.curves.rmse[static_cast<std::size_t>(t)], sum / 5.0, 1e-12);
  }
  const auto dir = scratch("table");
  emit_report(rs, dir);
  std::istringstream table(slurp(dir / "tconv_table.csv"));
  std::string line;
  std::getline(table, line);
  EXPECT_EQ(std::count(line.begin(), line.end(), ','), 2 + 10);
  int rows = 0;
  while (std::getline(table, line)) {
    ++rows;
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), 2 + 10);
  }
  EXPECT_EQ(rows, 6);
  EXPECT_TRUE(fs::exists(dir / "aggregate_curves.csv"));
  EXPECT_TRUE(fs::exists(dir / "scenario-3" / "curves.csv"));
  const auto loaded = load_results(dir);
  EXPECT_EQ(loaded.size(), 10u);
  fs::remove_all(dir);
}
