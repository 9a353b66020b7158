#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <string>

#include "ledsim/harness.h"

namespace ledsim {
namespace {

TEST(PresetTest, EveryListedNameResolves) {
  for (const std::string& name : PresetNames()) {
    auto s = Preset(name);
    ASSERT_TRUE(s.has_value()) << name;
    EXPECT_NO_THROW(s->Validate()) << name;
  }
  EXPECT_FALSE(Preset("no-such-preset").has_value());
}

TEST(PresetTest, HighSpeedAndAdslBdp) {
  const Scenario hs = *Preset("fig2a");
  EXPECT_EQ(hs.BdpBytes(), 62'500);
  EXPECT_NEAR(hs.BdpPackets(), 62'500.0 / 1500.0, 1e-9);
  EXPECT_NEAR(hs.BdpPackets(), 41.6, 0.1);
  ASSERT_EQ(hs.flows.size(), 2u);
  EXPECT_EQ(hs.flows[0].kind, FlowKind::kTcp);
  EXPECT_EQ(hs.flows[1].kind, FlowKind::kLedbat);

  const Scenario adsl = *Preset("adsl-down-tcp-vs-ledbat");
  EXPECT_EQ(adsl.BdpBytes(), 12'500);
  EXPECT_NEAR(adsl.BdpPackets(), 12'500.0 / 1500.0, 1e-9);
  EXPECT_NEAR(adsl.BdpPackets(), 8.3, 0.1);
  EXPECT_EQ(adsl.buffer_pkts, 10);
}

TEST(PresetTest, LateComerSettings) {
  const Scenario mid = *Preset("fig3-mid");
  EXPECT_EQ(mid.buffer_pkts, 40);
  EXPECT_EQ(ResolveStarts(mid)[1], SimTime::Seconds(10));
  const Scenario bottom = *Preset("fig3-bottom");
  EXPECT_EQ(bottom.buffer_pkts, 100);
  EXPECT_EQ(ResolveStarts(*Preset("fig3-top"))[1], SimTime::Seconds(2));
}

TEST(Table1GridTest, TwentyFourUniqueCells) {
  const auto grid = Table1Grid();
  ASSERT_EQ(grid.size(), 24u);
  std::set<std::string> names;
  for (const Table1Cell& cell : grid) {
    names.insert(cell.PresetName());
    const Scenario s = *Preset(cell.PresetName());
    EXPECT_EQ(s.capacity_bps, cell.capacity_bps);
    EXPECT_EQ(s.buffer_pkts, cell.buffer_pkts);
    ASSERT_EQ(s.flows.size(), 2u);
    EXPECT_EQ(s.flows[0].kind, cell.first);
    EXPECT_EQ(s.flows[1].kind, FlowKind::kLedbat);
    EXPECT_EQ(s.flows[0].slow_start(), cell.slow_start);
    EXPECT_EQ(s.flows[1].slow_start(), cell.slow_start);
  }
  EXPECT_EQ(names.size(), 24u);
  EXPECT_EQ(grid.front().PresetName(), "table1-tcp-ledbat-c2-b10-dt2-noss");
  EXPECT_EQ(grid.front().DeltaTLabel(), "2");
}

TEST(ResolveStartsTest, UniformDeltaHasMeanFive) {
  Scenario s = Table1Scenario(Table1Grid()[4]);
  ASSERT_EQ(s.delta_t.mode, DeltaT::Mode::kUniform);
  double sum = 0;
  constexpr int kSeeds = 10'000;
  for (int seed = 0; seed < kSeeds; ++seed) {
    s.seed = static_cast<std::uint64_t>(seed);
    const SimTime start = ResolveStarts(s)[1];
    ASSERT_GE(start, SimTime::Zero());
    ASSERT_LE(start, SimTime::Seconds(10));
    sum += start.seconds();
  }
  EXPECT_NEAR(sum / kSeeds, 5.0, 0.1);
}

TEST(ResolveStartsTest, JitterStaysInRangeAndFollowsSeed) {
  Scenario s = Table1Scenario(Table1Grid()[0]);
  ASSERT_EQ(s.delta_t.mode, DeltaT::Mode::kFixed);
  ASSERT_GT(s.start_jitter_s, 0.0);
  std::set<std::int64_t> distinct;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    s.seed = seed;
    const auto starts = ResolveStarts(s);
    EXPECT_EQ(starts[0], SimTime::Zero());
    EXPECT_GE(starts[1], SimTime::Seconds(2));
    EXPECT_LE(starts[1], SecondsToSimTime(2 + s.start_jitter_s));
    distinct.insert(starts[1].us());
    EXPECT_EQ(ResolveStarts(s), starts);
  }
  EXPECT_GT(distinct.size(), 150u);
}

constexpr std::string_view kExample = R"(ledsim-scenario v1
# two flows on a small link
name = example
capacity_bps = 2000000
buffer_pkts = 10
duration_s = 60
seed = 9
delta_t = fixed:2.5

[flow]
kind = tcp
slow_start = on

[flow]
kind = ledbat
target_ms = 25
gain_mode = explicit
gain = 3/50000
pacing = off
base_histo_min = 2
estimator = pinned_zero
receiver_clock_offset_us = -7
)";

TEST(ParseScenarioTest, ReadsEveryField) {
  const Scenario s = ParseScenario(kExample);
  EXPECT_EQ(s.name, "example");
  EXPECT_EQ(s.capacity_bps, 2'000'000);
  EXPECT_EQ(s.buffer_pkts, 10);
  EXPECT_EQ(s.rtt_base_us, 50'000);
  EXPECT_DOUBLE_EQ(s.duration_s, 60);
  EXPECT_EQ(s.seed, 9u);
  EXPECT_EQ(s.delta_t.mode, DeltaT::Mode::kFixed);
  EXPECT_DOUBLE_EQ(s.delta_t.fixed_s, 2.5);
  ASSERT_EQ(s.flows.size(), 2u);
  EXPECT_TRUE(s.flows[0].tcp.slow_start);
  const LedbatConfig& l = s.flows[1].ledbat;
  EXPECT_EQ(l.gain(), (Gain{3, 50'000}));
  EXPECT_FALSE(l.pacing);
  EXPECT_EQ(l.base_histo_minutes, 2);
  EXPECT_TRUE(l.pin_queuing_delay_zero);
  EXPECT_EQ(s.flows[1].receiver_clock_offset_us, -7);
}

TEST(ParseScenarioTest, FormatRoundTrips) {
  for (const std::string& name : {std::string("fig3-bottom"), std::string("fig2a"),
                                  Table1Grid()[5].PresetName()}) {
    const Scenario s = *Preset(name);
    const std::string text = FormatScenario(s);
    EXPECT_EQ(FormatScenario(ParseScenario(text)), text) << name;
  }
  const Scenario parsed = ParseScenario(kExample);
  EXPECT_EQ(FormatScenario(ParseScenario(FormatScenario(parsed))), FormatScenario(parsed));
}

TEST(ParseScenarioTest, UnknownKeyNamesKeyAndLine) {
  const std::string text = "ledsim-scenario v1\nname = x\n\n[flow]\nkind = ledbat\ntarget_msec = 20\n";
  try {
    ParseScenario(text, "bad.scn");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 6);
    EXPECT_NE(std::string(e.what()).find("target_msec"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("bad.scn:6"), std::string::npos);
  }
}

TEST(ParseScenarioTest, RejectsMalformedInput) {
  EXPECT_THROW(ParseScenario("name = x\n"), ParseError);
  EXPECT_THROW(ParseScenario(""), ParseError);
  EXPECT_THROW(ParseScenario("ledsim-scenario v1\n[flow]\nkind = cubic\n"), ParseError);
  EXPECT_THROW(ParseScenario("ledsim-scenario v1\n[flow]\nstart_s = 1\n"), ParseError);
  EXPECT_THROW(ParseScenario("ledsim-scenario v1\nseed = 1\nseed = 2\n[flow]\nkind = tcp\n"),
               ParseError);
  EXPECT_THROW(ParseScenario("ledsim-scenario v1\nbuffer_pkts = ten\n[flow]\nkind = tcp\n"),
               ParseError);
  EXPECT_THROW(ParseScenario("ledsim-scenario v1\n[flow]\nkind = tcp\npacing = on\n"), ParseError);
}

TEST(ParseScenarioTest, ValidationErrors) {
  EXPECT_THROW(ParseScenario("ledsim-scenario v1\nbuffer_pkts = 0\n[flow]\nkind = tcp\n"),
               ValidationError);
  EXPECT_THROW(ParseScenario("ledsim-scenario v1\n"), ValidationError);
  EXPECT_THROW(
      ParseScenario("ledsim-scenario v1\n[flow]\nkind = ledbat\nbase_histo_min = 20\n"),
      ValidationError);
  EXPECT_THROW(ParseScenario("ledsim-scenario v1\ndelta_t = fixed:3\n[flow]\nkind = tcp\n"),
               ValidationError);
}

TEST(LoadScenarioTest, MissingFileNamesPath) {
  try {
    LoadScenario("/nonexistent/dir/x.scn");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("/nonexistent/dir/x.scn"), std::string::npos);
  }
}

TEST(LoadScenarioTest, ReadsFile) {
  const auto path = std::filesystem::temp_directory_path() / "ledsim-scenario-test.scn";
  {
    std::ofstream out(path);
    out << kExample;
  }
  EXPECT_EQ(LoadScenario(path).name, "example");
  std::filesystem::remove(path);
}

}  // namespace
}  // namespace ledsim
