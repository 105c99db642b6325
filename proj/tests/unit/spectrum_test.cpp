#include <gtest/gtest.h>

#include "linkdrift/errors.hpp"
#include "linkdrift/spectrum.hpp"
#include "support.hpp"

using namespace linkdrift;
using linkdrift::testing::make_topology;

namespace {

Demand demand(double gbps, std::uint64_t id = 1) {
  Demand d;
  d.id = id;
  d.s = 0;
  d.t = 1;
  d.gbps = gbps;
  d.holding = 4;
  d.arrival = 10;
  return d;
}

std::vector<CandidatePath> sole_path(double km) { return {CandidatePath{{0}, km}}; }

}  // namespace

TEST(Modulation, Table) {
  ASSERT_EQ(kModulationFormats.size(), 4u);
  EXPECT_EQ(kModulationFormats[0].name, "BPSK");
  EXPECT_EQ(kModulationFormats[0].gbps, 50.0);
  EXPECT_EQ(kModulationFormats[0].reach_km, 6300.0);
  EXPECT_EQ(kModulationFormats[1].gbps, 100.0);
  EXPECT_EQ(kModulationFormats[1].reach_km, 3500.0);
  EXPECT_EQ(kModulationFormats[2].gbps, 150.0);
  EXPECT_EQ(kModulationFormats[2].reach_km, 1200.0);
  EXPECT_EQ(kModulationFormats[3].name, "16QAM");
  EXPECT_EQ(kModulationFormats[3].gbps, 200.0);
  EXPECT_EQ(kModulationFormats[3].reach_km, 600.0);
  EXPECT_EQ(kSlicesPerChannel * kSliceWidthGhz, 37.5);
}

TEST(Modulation, ChannelAndRegeneratorArithmetic) {
  EXPECT_EQ(channels_needed(250, kModulationFormats[3]), 2);
  EXPECT_EQ(channels_needed(200, kModulationFormats[3]), 1);
  EXPECT_EQ(channels_needed(5, kModulationFormats[0]), 1);
  EXPECT_EQ(regenerators_needed(600, kModulationFormats[3]), 0);
  EXPECT_EQ(regenerators_needed(601, kModulationFormats[3]), 1);
  EXPECT_EQ(regenerators_needed(7000, kModulationFormats[0]), 1);
}

TEST(SelectLightpath, ShortPathUses16QamFirstFit) {
  SpectrumGrid grid(1, 320);
  const auto lp = select_lightpath(grid, demand(100), sole_path(500));
  ASSERT_TRUE(lp);
  EXPECT_EQ(lp->format().name, "16QAM");
  EXPECT_EQ(lp->channel_starts, std::vector<int>{0});
  EXPECT_EQ(lp->regenerators, 0);
  EXPECT_EQ(lp->expiry, 14);
}

TEST(SelectLightpath, MultiChannelDemand) {
  SpectrumGrid grid(1, 320);
  const auto lp = select_lightpath(grid, demand(250), sole_path(500));
  ASSERT_TRUE(lp);
  EXPECT_EQ(lp->format().name, "16QAM");
  EXPECT_EQ(lp->channel_starts, (std::vector<int>{0, 3}));
}

TEST(SelectLightpath, LongPathMinimizesRegeneratorsThenBitrate) {
  SpectrumGrid grid(1, 320);
  // 7000 km: BPSK and QPSK both need one regenerator; QPSK is more efficient.
  auto lp = select_lightpath(grid, demand(50), sole_path(7000));
  ASSERT_TRUE(lp);
  EXPECT_EQ(lp->regenerators, 1);
  EXPECT_EQ(lp->format().name, "QPSK");
  // 4000 km: only BPSK avoids regeneration.
  lp = select_lightpath(grid, demand(50), sole_path(4000));
  ASSERT_TRUE(lp);
  EXPECT_EQ(lp->regenerators, 0);
  EXPECT_EQ(lp->format().name, "BPSK");
}

TEST(SelectLightpath, FirstFitSkipsOccupiedSlices) {
  SpectrumGrid grid(1, 320);
  const std::vector<LinkId> path{0};
  grid.occupy(path, 0, 3, 99);
  const auto lp = select_lightpath(grid, demand(100), sole_path(500));
  ASSERT_TRUE(lp);
  EXPECT_EQ(lp->channel_starts, std::vector<int>{3});
}

TEST(SelectLightpath, PrefersLongerPathOverWeakerModulation) {
  // Path 0 is shorter but full; path 1 still supports 16QAM.
  SpectrumGrid grid(3, 3);
  grid.occupy(std::vector<LinkId>{0}, 0, 3, 7);
  const std::vector<CandidatePath> cands{{{0}, 300}, {{1, 2}, 500}};
  const auto lp = select_lightpath(grid, demand(100), cands);
  ASSERT_TRUE(lp);
  EXPECT_EQ(lp->path.links, (std::vector<LinkId>{1, 2}));
  EXPECT_EQ(lp->format().name, "16QAM");
}

TEST(SelectLightpath, SpectrumContinuityAcrossLinks) {
  SpectrumGrid grid(2, 9);
  grid.occupy(std::vector<LinkId>{0}, 0, 3, 5);
  grid.occupy(std::vector<LinkId>{1}, 3, 3, 6);
  const std::vector<CandidatePath> cands{{{0, 1}, 400}};
  const auto lp = select_lightpath(grid, demand(100), cands);
  ASSERT_TRUE(lp);
  EXPECT_EQ(lp->channel_starts, std::vector<int>{6});
}

TEST(SelectLightpath, BlockedWhenNoSpectrum) {
  SpectrumGrid grid(1, 5);
  grid.occupy(std::vector<LinkId>{0}, 2, 1, 3);
  EXPECT_FALSE(select_lightpath(grid, demand(100), sole_path(500)));
  EXPECT_FALSE(select_lightpath(grid, demand(100), {}));
}

TEST(SpectrumGrid, RejectsDoubleBookingAndForeignRelease) {
  SpectrumGrid grid(2, 6);
  const std::vector<LinkId> path{0, 1};
  grid.occupy(path, 0, 3, 1);
  EXPECT_THROW(grid.occupy(std::vector<LinkId>{1}, 2, 3, 2), Error);
  EXPECT_THROW(grid.release(path, 0, 3, 2), Error);
  EXPECT_EQ(grid.first_fit(path, 3), 3);
  grid.release(path, 0, 3, 1);
  EXPECT_EQ(grid.occupied_slices(0), 0u);
}
