#include <algorithm>
#include <functional>
#include <set>

#include <gtest/gtest.h>

#include "linkdrift/errors.hpp"
#include "linkdrift/rng.hpp"
#include "linkdrift/scenario.hpp"
#include "linkdrift/topology.hpp"
#include "support.hpp"

using namespace linkdrift;
using linkdrift::testing::bidirectional;
using linkdrift::testing::make_topology;

TEST(Topology, BundledEuro28) {
  const Topology t = load_topology_file(default_topology_path());
  EXPECT_EQ(t.node_count(), 28u);
  EXPECT_EQ(t.link_count(), 82u);
  for (const auto& l : t.links()) EXPECT_GT(l.length_km, 0.0);
  std::vector<std::string> dcs;
  for (NodeId d : t.dc_nodes()) dcs.push_back(t.node(d).key);
  EXPECT_EQ(dcs, (std::vector<std::string>{"AMS", "BER", "BUD", "CPH", "FRA", "HAM", "LON"}));
  EXPECT_TRUE(t.strongly_connected());
}

TEST(Topology, ExplicitDcPlacementOverridesDefault) {
  DcPlacement p;
  p.explicit_nodes = {"MAD", "ROM", "WAW"};
  const Topology t = load_topology_file(default_topology_path(), p);
  ASSERT_EQ(t.dc_nodes().size(), 3u);
  EXPECT_TRUE(t.is_dc(t.node_id("ROM")));
  EXPECT_FALSE(t.is_dc(t.node_id("FRA")));
}

TEST(Topology, MinimalDocument) {
  const Topology t = load_topology(R"({"nodes":[{"id":"A","name":"A","population_weight":1},
    {"id":"B","name":"B","population_weight":1}],
    "links":[{"id":"A-B","src":"A","dst":"B","length_km":100}]})");
  EXPECT_EQ(t.node_count(), 2u);
  EXPECT_EQ(t.link_count(), 1u);
  EXPECT_DOUBLE_EQ(t.link(0).length_km, 100.0);
}

TEST(Topology, RejectsBadDocuments) {
  const std::string nodes = R"("nodes":[{"id":"A","name":"A","population_weight":1},{"id":"B","name":"B","population_weight":1}])";
  EXPECT_THROW(load_topology("{" + nodes + R"(,"links":[{"id":"A-C","src":"A","dst":"C","length_km":5}]})"),
               TopologyError);
  EXPECT_THROW(load_topology("{" + nodes + R"(,"links":[{"id":"A-B","src":"A","dst":"B","length_km":0}]})"),
               TopologyError);
  EXPECT_THROW(load_topology("{" + nodes + R"(,"links":[{"id":"A-B","src":"A","dst":"B","length_km":-3}]})"),
               TopologyError);
  EXPECT_THROW(load_topology("{" + nodes + "}"), TopologyError);
  EXPECT_THROW(load_topology("not json"), TopologyError);
}

TEST(KShortestPaths, Triangle) {
  const Topology t = make_topology({"A", "B", "C"}, {{"A", "B", 1}, {"B", "C", 1}, {"A", "C", 3}});
  const auto paths = k_shortest_paths(t, t.node_id("A"), t.node_id("C"), 2);
  ASSERT_EQ(paths.size(), 2u);
  EXPECT_EQ(paths[0].links, (std::vector<LinkId>{t.link_id("A-B"), t.link_id("B-C")}));
  EXPECT_DOUBLE_EQ(paths[0].length_km, 2.0);
  EXPECT_EQ(paths[1].links, (std::vector<LinkId>{t.link_id("A-C")}));
  EXPECT_DOUBLE_EQ(paths[1].length_km, 3.0);
}

TEST(KShortestPaths, Preconditions) {
  const Topology t = make_topology({"A", "B"}, {{"A", "B", 1}});
  EXPECT_THROW(k_shortest_paths(t, 0, 0, 3), PreconditionError);
  EXPECT_THROW(k_shortest_paths(t, 0, 1, 0), PreconditionError);
  EXPECT_EQ(k_shortest_paths(t, 0, 1, 5).size(), 1u);
  EXPECT_TRUE(k_shortest_paths(t, 1, 0, 5).empty());
  EXPECT_TRUE(k_shortest_paths(t, 0, 1, 5, {0}).empty());
}

namespace {

// Every simple s-d path, sorted by (length, link ids).
std::vector<CandidatePath> enumerate_paths(const Topology& t, NodeId s, NodeId d, const LinkSet& failed) {
  std::vector<CandidatePath> out;
  std::vector<bool> visited(t.node_count(), false);
  CandidatePath cur;
  std::function<void(NodeId)> dfs = [&](NodeId u) {
    if (u == d) {
      out.push_back(cur);
      return;
    }
    visited[u] = true;
    for (LinkId l : t.out_links(u)) {
      const auto& link = t.link(l);
      if (failed.count(l) || visited[link.dst]) continue;
      cur.links.push_back(l);
      cur.length_km += link.length_km;
      dfs(link.dst);
      cur.links.pop_back();
      cur.length_km -= link.length_km;
    }
    visited[u] = false;
  };
  dfs(s);
  std::sort(out.begin(), out.end(), [](const CandidatePath& a, const CandidatePath& b) {
    return a.length_km != b.length_km ? a.length_km < b.length_km : a.links < b.links;
  });
  return out;
}

Topology random_graph(Rng& rng, int n) {
  std::vector<std::string> names;
  for (int i = 0; i < n; ++i) names.push_back("N" + std::to_string(i));
  std::vector<linkdrift::testing::Edge> edges;
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      if (a != b && rng.uniform() < 0.45)
        edges.push_back({names[a], names[b], static_cast<double>(rng.uniform_int(1, 4))});
  return make_topology(names, edges);
}

}  // namespace

TEST(KShortestPaths, MatchesBruteForceOnSmallGraphs) {
  Rng rng(2024);
  int compared = 0;
  for (int trial = 0; trial < 150; ++trial) {
    const int n = static_cast<int>(rng.uniform_int(3, 7));
    const Topology t = random_graph(rng, n);
    LinkSet failed;
    if (t.link_count() > 0 && rng.uniform() < 0.3)
      failed.insert(static_cast<LinkId>(rng.uniform_int(0, static_cast<std::int64_t>(t.link_count()) - 1)));
    const auto s = static_cast<NodeId>(rng.uniform_int(0, n - 1));
    auto d = static_cast<NodeId>(rng.uniform_int(0, n - 2));
    if (d >= s) ++d;
    const auto k = static_cast<std::size_t>(rng.uniform_int(1, 12));
    auto expected = enumerate_paths(t, s, d, failed);
    if (expected.size() > k) expected.resize(k);
    const auto got = k_shortest_paths(t, s, d, k, failed);
    ASSERT_EQ(got.size(), expected.size()) << "trial " << trial;
    for (std::size_t i = 0; i < got.size(); ++i) {
      EXPECT_EQ(got[i].links, expected[i].links) << "trial " << trial << " rank " << i;
      EXPECT_DOUBLE_EQ(got[i].length_km, expected[i].length_km);
      const auto nodes = path_nodes(t, got[i]);
      EXPECT_EQ(std::set<NodeId>(nodes.begin(), nodes.end()).size(), nodes.size());
    }
    compared += static_cast<int>(got.size());
  }
  EXPECT_GT(compared, 200);
}

TEST(NearestDc, StrictMinimumAndFailover) {
  // C reaches DC A at 5 km and DC B at 7 km.
  const Topology t =
      make_topology({"A", "B", "C"}, bidirectional({{"C", "A", 5}, {"C", "B", 7}}), {"A", "B"});
  const NodeId c = t.node_id("C");
  EXPECT_EQ(nearest_dc(t, c), t.node_id("A"));
  EXPECT_EQ(nearest_dc(t, c, {t.link_id("C-A")}), t.node_id("B"));
  EXPECT_THROW(nearest_dc(t, c, {t.link_id("C-A"), t.link_id("C-B")}), NoDcError);
}

TEST(NearestDc, TiesGoToLowerNodeId) {
  const Topology t =
      make_topology({"A", "B", "C"}, bidirectional({{"C", "A", 5}, {"C", "B", 5}}), {"A", "B"});
  EXPECT_EQ(nearest_dc(t, t.node_id("C")), t.node_id("A"));
}

TEST(NearestDc, FailuresNeverShortenTheDistance) {
  const Topology t = load_topology_file(default_topology_path());
  Rng rng(5);
  for (int trial = 0; trial < 40; ++trial) {
    LinkSet failed;
    for (int i = 0; i < 3; ++i) failed.insert(static_cast<LinkId>(rng.uniform_int(0, 81)));
    for (NodeId c : t.clients()) {
      const double base = shortest_distances(t, c)[nearest_dc(t, c)];
      NodeId dc;
      try {
        dc = nearest_dc(t, c, failed);
      } catch (const NoDcError&) {
        continue;
      }
      EXPECT_LE(base, shortest_distances(t, c, failed)[dc]);
    }
  }
}
