#include <gtest/gtest.h>

#include "linkdrift/errors.hpp"
#include "linkdrift/harness.hpp"
#include "linkdrift/simulator.hpp"
#include "support.hpp"

using namespace linkdrift;
using linkdrift::testing::bidirectional;
using linkdrift::testing::make_topology;
using linkdrift::testing::share;

namespace {

Demand make_demand(std::uint64_t id, NodeId s, NodeId t, double gbps, int arrival, int holding) {
  Demand d;
  d.id = id;
  d.s = s;
  d.t = t;
  d.gbps = gbps;
  d.arrival = arrival;
  d.holding = holding;
  return d;
}

// A-B direct (100 km) and A-C-B detour (200 + 200 km).
std::shared_ptr<const Topology> square() {
  return share(make_topology({"A", "B", "C"}, bidirectional({{"A", "B", 100}, {"A", "C", 200}, {"C", "B", 200}}),
                             {"A", "B"}));
}

int count(const std::vector<SimEvent>& ev, EventKind k) {
  int n = 0;
  for (const auto& e : ev) n += e.kind == k;
  return n;
}

}  // namespace

TEST(NetworkState, ReleaseBeforeAllocate) {
  auto t = square();
  NetworkState st(t, {3, 1});
  auto ev = st.advance_step(0, {make_demand(1, 0, 1, 100, 0, 5)});
  ASSERT_EQ(count(ev, EventKind::Allocated), 1);
  ev = st.advance_step(1, {make_demand(2, 0, 1, 100, 1, 5)});
  EXPECT_EQ(count(ev, EventKind::Rejected), 1);
  ev = st.advance_step(5, {make_demand(3, 0, 1, 100, 5, 5)});
  EXPECT_EQ(count(ev, EventKind::Expired), 1);
  EXPECT_EQ(count(ev, EventKind::Allocated), 1);
  EXPECT_EQ(st.active().count(3), 1u);
}

TEST(NetworkState, RejectedArrivalLeavesStateUnchanged) {
  auto t = square();
  NetworkState st(t, {3, 1});
  const auto ev = st.advance_step(0, {make_demand(1, 0, 1, 250, 0, 5)});
  EXPECT_EQ(count(ev, EventKind::Rejected), 1);
  EXPECT_TRUE(st.active().empty());
  EXPECT_EQ(st.grid().occupied_slices(0), 0u);
  EXPECT_EQ(st.counters().rejected_before_failure, 1u);
}

TEST(NetworkState, ArrivalOrderDecidesTheLastChannel) {
  auto t = square();
  for (int order = 0; order < 2; ++order) {
    NetworkState st(t, {3, 1});
    std::vector<Demand> arrivals{make_demand(1, 0, 1, 50, 0, 5), make_demand(2, 0, 1, 80, 0, 5)};
    if (order) std::swap(arrivals[0], arrivals[1]);
    st.advance_step(0, arrivals);
    ASSERT_EQ(st.active().size(), 1u);
    EXPECT_EQ(st.active().begin()->first, arrivals[0].id);
  }
}

TEST(NetworkState, FailureOnIdleLinkOnlyMarksIt) {
  auto t = square();
  NetworkState st(t, {9, 3});
  st.advance_step(0, {make_demand(1, 0, 1, 100, 0, 9)});
  const auto before = st.active();
  const auto ev = st.inject_failure(1, t->link_id("C-B"));
  EXPECT_TRUE(ev.empty());
  EXPECT_EQ(st.failed_links(), LinkSet{t->link_id("C-B")});
  ASSERT_EQ(st.active().size(), before.size());
  EXPECT_EQ(st.active().at(1).path, before.at(1).path);
  EXPECT_THROW(st.inject_failure(2, t->link_id("C-B")), PreconditionError);
}

TEST(NetworkState, RestorationKeepsExpiryAndAvoidsFailedLink) {
  auto t = square();
  NetworkState st(t, {9, 3});
  st.advance_step(0, {make_demand(1, 0, 1, 100, 0, 9)});
  const LinkId ab = t->link_id("A-B");
  ASSERT_EQ(st.active().at(1).path.links, std::vector<LinkId>{ab});
  const auto ev = st.inject_failure(4, ab);
  EXPECT_EQ(count(ev, EventKind::FailedAffected), 1);
  EXPECT_EQ(count(ev, EventKind::Restored), 1);
  const auto& lp = st.active().at(1);
  EXPECT_EQ(lp.expiry, 9);
  EXPECT_EQ(lp.path.links, (std::vector<LinkId>{t->link_id("A-C"), t->link_id("C-B")}));
  EXPECT_EQ(st.grid().occupied_slices(ab), 0u);
  EXPECT_TRUE(st.check_invariants().empty());
}

TEST(NetworkState, AffectedDemandAtExpiryIsDropped) {
  auto t = square();
  NetworkState st(t, {9, 3});
  st.advance_step(0, {make_demand(1, 0, 1, 100, 0, 3)});
  const auto ev = st.inject_failure(3, t->link_id("A-B"));
  EXPECT_EQ(count(ev, EventKind::Expired), 1);
  EXPECT_EQ(count(ev, EventKind::Restored), 0);
  EXPECT_TRUE(st.active().empty());
}

TEST(NetworkState, RestorationRejectedWhenDetourIsFull) {
  auto t = square();
  NetworkState st(t, {3, 3});
  st.advance_step(0, {make_demand(1, 0, 1, 100, 0, 9), make_demand(2, 0, 2, 100, 0, 9)});
  ASSERT_EQ(st.active().size(), 2u);
  const auto ev = st.inject_failure(1, t->link_id("A-B"));
  EXPECT_EQ(count(ev, EventKind::RestorationRejected), 1);
  EXPECT_EQ(st.counters().restoration_rejected, 1u);
}

TEST(LinkLoadSeries, DirectAccounting) {
  auto t = square();
  NetworkState st(t, {9, 1});
  for (int s = 0; s < 30; ++s) {
    std::vector<Demand> arrivals;
    if (s == 10) arrivals.push_back(make_demand(1, 0, 1, 100, 10, 10));
    st.advance_step(s, arrivals);
  }
  const auto used = link_load_series(st.events(), *t, t->link_id("A-B"), 30);
  const auto idle = link_load_series(st.events(), *t, t->link_id("B-A"), 30);
  for (int s = 0; s < 30; ++s) {
    EXPECT_EQ(used.values[static_cast<std::size_t>(s)], (s >= 10 && s <= 19) ? 100.0 : 0.0) << s;
    EXPECT_EQ(idle.values[static_cast<std::size_t>(s)], 0.0);
  }
}

namespace {

ScenarioConfig desk_config() {
  ScenarioConfig c;
  c.traffic.steps = 400;
  c.traffic.total_load_tbps = 2.0;
  c.seed = 21;
  return c;
}

}  // namespace

TEST(Simulation, InvariantsConservationAndReplayOnEuro28) {
  auto t = share(load_topology_file(default_topology_path()));
  auto cfg = desk_config();
  cfg.failure = FailureSpec{"FRA-MUC", "MUC-VIE", 250};
  const auto out = simulate_scenario(t, cfg, true, true);
  EXPECT_TRUE(out.violations.empty()) << out.violations.front();
  EXPECT_GT(out.counters.failed_affected, 0u);
  const auto replay = replay_link_loads(out.events, t->link_count(), cfg.traffic.steps);
  for (std::size_t l = 0; l < t->link_count(); ++l)
    for (int s = 0; s < cfg.traffic.steps; ++s)
      ASSERT_NEAR(replay[l][static_cast<std::size_t>(s)], out.link_history[l][static_cast<std::size_t>(s)], 1e-6);
  // The failed link is empty from the failure on.
  const LinkId failed = t->link_id("FRA-MUC");
  for (int s = 250; s < cfg.traffic.steps; ++s) EXPECT_EQ(out.link_history[failed][static_cast<std::size_t>(s)], 0.0);
}

TEST(Simulation, ConservationOfLinkLoad) {
  auto t = share(load_topology_file(default_topology_path()));
  auto cfg = desk_config();
  auto traffic = std::make_shared<const TrafficModel>(*t, cfg.traffic_config());
  Simulation sim(t, traffic, cfg.sim, cfg.demand_seed());
  for (int s = 0; s < 120; ++s) {
    sim.step(s == 60 ? std::optional<LinkId>(t->link_id("PAR-LON")) : std::nullopt);
    double links = 0.0, demands = 0.0;
    for (double v : sim.state().link_loads()) links += v;
    for (const auto& [id, lp] : sim.state().active()) {
      demands += lp.gbps * static_cast<double>(lp.path.hops());
      EXPECT_LE(lp.gbps, lp.capacity_gbps());
    }
    ASSERT_NEAR(links, demands, 1e-6);
  }
}

TEST(Simulation, IdenticalInputsGiveIdenticalEventLogs) {
  auto t = share(load_topology_file(default_topology_path()));
  auto cfg = desk_config();
  cfg.traffic.steps = 150;
  cfg.failure = FailureSpec{"AMS-HAM", "HAM-BER", 100};
  const auto a = simulate_scenario(t, cfg, true);
  const auto b = simulate_scenario(t, cfg, true);
  ASSERT_EQ(a.events.size(), b.events.size());
  for (std::size_t i = 0; i < a.events.size(); ++i) {
    EXPECT_EQ(a.events[i].step, b.events[i].step);
    EXPECT_EQ(a.events[i].kind, b.events[i].kind);
    EXPECT_EQ(a.events[i].demand, b.events[i].demand);
    EXPECT_EQ(a.events[i].path, b.events[i].path);
  }
  for (std::size_t i = 1; i < a.events.size(); ++i) EXPECT_LE(a.events[i - 1].step, a.events[i].step);
}

TEST(Simulation, CarriedLoadTracksTargetWithoutBlocking) {
  auto t = share(make_topology({"A", "B", "C"}, bidirectional({{"A", "B", 300}, {"A", "C", 400}, {"C", "B", 350}}),
                               {"A", "B"}));
  TrafficModelConfig tc;
  tc.steps = 300;
  tc.total_load_tbps = 3.0;
  auto traffic = std::make_shared<const TrafficModel>(*t, tc);
  Simulation sim(t, traffic, {320, 3}, 8);
  std::vector<double> targets;
  for (int s = 0; s < tc.steps; ++s) {
    sim.step();
    ASSERT_EQ(sim.state().counters().rejected, 0u);
    traffic->pair_targets(s, sim.state().anycast(), targets);
    const auto& carried = sim.state().carried();
    for (std::size_t i = 0; i < targets.size(); ++i) {
      EXPECT_GE(carried[i], targets[i] - 2.5 - 1e-9) << "pair " << i << " step " << s;
    }
  }
}
