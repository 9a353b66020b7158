#include <gtest/gtest.h>

#include <algorithm>
#include <atomic>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ledsim/harness.h"

namespace ledsim {
namespace {

// 100 s on a 1 Mbps link; rates are given per 1 s bin as fractions of C.
TraceSet Synthetic(const std::vector<std::pair<double, double>>& shares) {
  TraceSet t;
  t.capacity_bps = 1'000'000;
  t.duration = SimTime::Seconds(static_cast<std::int64_t>(shares.size()));
  t.flows = {{FlowKind::kLedbat, SimTime::Zero()}, {FlowKind::kLedbat, SimTime::Zero()}};
  for (std::size_t b = 0; b < shares.size(); ++b) {
    const std::int64_t mid = static_cast<std::int64_t>(b) * 1'000'000 + 500'000;
    // One record per flow per bin carrying the whole bin's bytes.
    const auto bytes = [](double share) {
      return static_cast<std::uint32_t>(share * 1'000'000 / 8);
    };
    if (shares[b].first > 0) t.departed.push_back({mid, 0, bytes(shares[b].first), false});
    if (shares[b].second > 0) t.departed.push_back({mid, 1, bytes(shares[b].second), false});
  }
  return t;
}

TEST(StarvationTest, DetectsSustainedStarvation) {
  std::vector<std::pair<double, double>> shares(100, {0.5, 0.5});
  for (std::size_t b = 30; b < 45; ++b) shares[b] = {0.01, 0.99};
  const auto episodes = DetectStarvation(Synthetic(shares));
  ASSERT_EQ(episodes.size(), 1u);
  EXPECT_EQ(episodes[0].flow, 0);
  EXPECT_DOUBLE_EQ(episodes[0].start_s, 30);
  EXPECT_DOUBLE_EQ(episodes[0].end_s, 45);
}

TEST(StarvationTest, IgnoresShortDips) {
  std::vector<std::pair<double, double>> shares(100, {0.5, 0.5});
  for (std::size_t b = 30; b < 39; ++b) shares[b] = {0.0, 0.99};
  EXPECT_TRUE(DetectStarvation(Synthetic(shares)).empty());
}

TEST(StarvationTest, IdleLinkIsNotStarvation) {
  std::vector<std::pair<double, double>> shares(100, {0.0, 0.3});
  EXPECT_TRUE(DetectStarvation(Synthetic(shares)).empty());
}

TEST(StarvationTest, EpisodeRunningToTheEnd) {
  std::vector<std::pair<double, double>> shares(100, {0.5, 0.5});
  for (std::size_t b = 80; b < 100; ++b) shares[b] = {0.95, 0.02};
  const auto episodes = DetectStarvation(Synthetic(shares));
  ASSERT_EQ(episodes.size(), 1u);
  EXPECT_EQ(episodes[0].flow, 1);
  EXPECT_DOUBLE_EQ(episodes[0].end_s, 100);
}

TEST(StarvationTest, NotStartedFlowIsNotStarved) {
  std::vector<std::pair<double, double>> shares(100, {0.99, 0.0});
  TraceSet t = Synthetic(shares);
  t.flows[1].start = SimTime::Seconds(95);
  EXPECT_TRUE(DetectStarvation(t).empty());
}

TEST(StarvationTest, NeedsTwoFlows) {
  TraceSet t;
  t.capacity_bps = 1'000'000;
  t.flows.resize(1);
  EXPECT_THROW(DetectStarvation(t), UsageError);
}

TEST(ParallelForTest, VisitsEveryIndexOnce) {
  for (int jobs : {1, 2, 4}) {
    std::vector<std::atomic<int>> hits(257);
    ParallelFor(hits.size(), jobs, [&](std::size_t i) { ++hits[i]; });
    for (const auto& h : hits) EXPECT_EQ(h.load(), 1);
  }
  ParallelFor(0, 4, [](std::size_t) { FAIL(); });
}

TEST(ParallelForTest, RethrowsLowestFailingIndex) {
  for (int jobs : {1, 3}) {
    try {
      ParallelFor(50, jobs, [](std::size_t i) {
        if (i == 7 || i == 31) throw std::runtime_error(std::to_string(i));
      });
      FAIL() << "expected an exception";
    } catch (const std::runtime_error& e) {
      EXPECT_STREQ(e.what(), "7");
    }
  }
}

Table1Options SmallGrid(int jobs) {
  Table1Options o;
  o.runs_per_cell = 2;
  o.base_seed = 11;
  o.jobs = jobs;
  o.filter = [](const Table1Cell& c) { return c.capacity_bps == 2'000'000 && !c.slow_start; };
  o.mutate = [](Scenario& s) { s.duration_s = 40; };
  return o;
}

TEST(Table1Test, ThreadCountDoesNotChangeResults) {
  std::ostringstream one, two;
  const auto rows = RunTable1(SmallGrid(1));
  WriteTable1Csv(rows, one);
  WriteTable1Csv(RunTable1(SmallGrid(2)), two);
  EXPECT_EQ(one.str(), two.str());
  ASSERT_EQ(rows.size(), 6u);
  for (const Table1Row& row : rows) {
    EXPECT_EQ(row.runs.size(), 2u);
    EXPECT_EQ(row.aggregate.runs, 2u);
    EXPECT_GT(row.aggregate.eta_percent.mean, 90.0);
  }
}

TEST(Table1Test, CsvLayout) {
  std::ostringstream csv;
  WriteTable1Csv(RunTable1(SmallGrid(1)), csv);
  const std::string s = csv.str();
  EXPECT_EQ(s.rfind("scenario,C,B,dT,slow_start,eta_mean,eta_std,F_mean,F_std,L_mean,L_std\n"
                    "tcp-ledbat,2,10,2,off,",
                    0),
            0u);
  EXPECT_NE(s.find("\nledbat-ledbat,2,10,U(0,10),off,"), std::string::npos);
  EXPECT_EQ(std::count(s.begin(), s.end(), '\n'), 7);
}

TEST(Table1Test, RejectsZeroRuns) {
  Table1Options o;
  o.runs_per_cell = 0;
  EXPECT_THROW(RunTable1(o), UsageError);
}

}  // namespace
}  // namespace ledsim
