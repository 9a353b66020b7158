#include "ledsim/ledbat.h"

#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <vector>

#include "ledsim/tcp.h"

namespace ledsim {
namespace {

constexpr std::int64_t kBase = 26'200;
const SimTime kRtt = SimTime::Millis(50);

// Feeds one ack at `now` with a delay of base + queuing.
void Ack(LedbatController& c, std::int64_t queuing_us, SimTime now = SimTime::Seconds(1)) {
  c.OnAck({kBase + queuing_us, kRtt}, now);
}

LedbatController Linear(double cwnd) {
  LedbatConfig cfg;
  cfg.initial_cwnd_pkts = cwnd;
  LedbatController c(cfg);
  Ack(c, 0, SimTime::Zero());  // establishes the base; cwnd moves by +1/cwnd
  return c;
}

TEST(LedbatConfigTest, Defaults) {
  const LedbatConfig cfg;
  EXPECT_EQ(cfg.target_us, 25'000);
  EXPECT_EQ(cfg.gain(), (Gain{1, 25'000}));
  EXPECT_DOUBLE_EQ(cfg.min_cwnd_pkts, 1.0);
  EXPECT_TRUE(cfg.pacing);
  EXPECT_FALSE(cfg.slow_start);
  EXPECT_NO_THROW(cfg.Validate());
}

TEST(LedbatConfigTest, BaseHistoryRange) {
  LedbatConfig cfg;
  for (int m : {2, 5, 10}) {
    cfg.base_histo_minutes = m;
    EXPECT_NO_THROW(cfg.Validate());
  }
  for (int m : {0, 1, 11}) {
    cfg.base_histo_minutes = m;
    EXPECT_THROW(cfg.Validate(), ConfigError);
  }
  cfg.base_histo_minutes = 10;
  cfg.explicit_gain = Gain{0, 1};
  EXPECT_THROW(LedbatController{cfg}, ConfigError);
}

TEST(LedbatControllerTest, EmptyQueueGrowsByOneOverCwnd) {
  LedbatController c = Linear(10);
  const double before = c.cwnd();
  Ack(c, 0);
  EXPECT_NEAR(c.cwnd() - before, 1.0 / before, 1e-12);
  EXPECT_EQ(c.queuing_delay_us(), 0);
}

TEST(LedbatControllerTest, AtTargetHoldsWindow) {
  LedbatController c = Linear(10);
  const double before = c.cwnd();
  Ack(c, 25'000);
  EXPECT_DOUBLE_EQ(c.cwnd(), before);
}

TEST(LedbatControllerTest, TwiceTargetShrinksByOneOverCwnd) {
  LedbatController c = Linear(10);
  const double before = c.cwnd();
  Ack(c, 50'000);
  EXPECT_NEAR(c.cwnd() - before, -1.0 / before, 1e-12);
  EXPECT_EQ(c.queuing_delay_us(), 50'000);
  EXPECT_EQ(c.current_delay_us(), kBase + 50'000);
}

TEST(LedbatControllerTest, NeverBelowMinimumWindow) {
  LedbatController c = Linear(1);
  for (int i = 0; i < 100; ++i) Ack(c, 500'000);
  EXPECT_DOUBLE_EQ(c.cwnd(), 1.0);
}

TEST(LedbatControllerTest, LossHalvesOncePerRtt) {
  LedbatConfig cfg;
  cfg.initial_cwnd_pkts = 20;
  LedbatController c(cfg);
  EXPECT_TRUE(c.OnLoss({kRtt, SimTime::Millis(990), false}, SimTime::Seconds(1)));
  EXPECT_DOUBLE_EQ(c.cwnd(), 10.0);
  EXPECT_FALSE(c.OnLoss({kRtt, SimTime::Millis(1005), false}, SimTime::Millis(1010)));
  EXPECT_DOUBLE_EQ(c.cwnd(), 10.0);
}

TEST(LedbatControllerTest, HalvingRespectsFloor) {
  LedbatConfig cfg;
  cfg.initial_cwnd_pkts = 1.5;
  LedbatController c(cfg);
  c.OnLoss({kRtt, SimTime::Zero(), false}, SimTime::Seconds(1));
  EXPECT_DOUBLE_EQ(c.cwnd(), 1.0);
}

TEST(LedbatControllerTest, SlowStartDoublesPerRtt) {
  LedbatConfig cfg;
  cfg.slow_start = true;
  cfg.initial_cwnd_pkts = 2;
  LedbatController c(cfg);
  Ack(c, 0);
  Ack(c, 0);
  EXPECT_DOUBLE_EQ(c.cwnd(), 4.0);
  EXPECT_TRUE(c.ss_active());
  EXPECT_EQ(c.linear_acks(), 0u);
}

TEST(LedbatControllerTest, SlowStartLossResetsAndSetsThreshold) {
  LedbatConfig cfg;
  cfg.slow_start = true;
  cfg.initial_cwnd_pkts = 40;
  LedbatController c(cfg);
  EXPECT_TRUE(c.OnLoss({kRtt, SimTime::Zero(), false}, SimTime::Seconds(1)));
  EXPECT_DOUBLE_EQ(c.ssthresh(), 20.0);
  EXPECT_DOUBLE_EQ(c.cwnd(), 1.0);
  EXPECT_TRUE(c.ss_active());
  for (int i = 0; i < 19; ++i) Ack(c, 0, SimTime::Seconds(2));
  EXPECT_DOUBLE_EQ(c.cwnd(), 20.0);
  EXPECT_TRUE(c.ss_active());
  Ack(c, 0, SimTime::Seconds(2));
  EXPECT_DOUBLE_EQ(c.cwnd(), 21.0);
  EXPECT_FALSE(c.ss_active());
}

TEST(PacingGapTest, RttOverCwnd) {
  EXPECT_EQ(PacingGap(10, kRtt, true), SimTime::Micros(5000));
  EXPECT_EQ(PacingGap(1, kRtt, true), SimTime::Micros(50'000));
  EXPECT_EQ(PacingGap(10, kRtt, false), SimTime::Zero());
  EXPECT_EQ(PacingGap(10, SimTime::Zero(), true), SimTime::Zero());
  EXPECT_EQ(PacingGap(1e9, kRtt, true), SimTime::Micros(1));
}

TEST(BaseDelayHistoryTest, KeepsMinimum) {
  BaseDelayHistory h(10);
  EXPECT_FALSE(h.base_delay_us().has_value());
  h.Update(30'000, SimTime::Seconds(1));
  h.Update(26'200, SimTime::Seconds(2));
  h.Update(30'000, SimTime::Seconds(3));
  EXPECT_EQ(h.base_delay_us(), 26'200);
}

TEST(BaseDelayHistoryTest, OldMinutesRollOff) {
  BaseDelayHistory h(2);
  h.Update(26'200, SimTime::Seconds(10));   // minute 0
  h.Update(30'000, SimTime::Seconds(70));   // minute 1
  EXPECT_EQ(h.base_delay_us(), 26'200);
  EXPECT_EQ(h.slots(), 2u);
  h.Update(31'000, SimTime::Seconds(130));  // minute 2 evicts minute 0
  EXPECT_EQ(h.base_delay_us(), 30'000);
  EXPECT_EQ(h.slots(), 2u);
  h.Update(32'000, SimTime::Seconds(400));  // a gap clears every older slot
  EXPECT_EQ(h.base_delay_us(), 32'000);
  EXPECT_EQ(h.slots(), 1u);
}

// Random delay sequences exercising the controller invariants.
class LedbatPropertyTest : public ::testing::TestWithParam<std::uint64_t> {
 protected:
  std::vector<std::int64_t> Delays(std::size_t n) {
    std::mt19937_64 gen(GetParam());
    std::uniform_int_distribution<std::int64_t> q(0, 80'000);
    std::vector<std::int64_t> d(n);
    for (auto& x : d) x = kBase + q(gen);
    return d;
  }
};

TEST_P(LedbatPropertyTest, RampNeverFasterThanTcp) {
  LedbatController c{LedbatConfig{}};
  double prev = c.cwnd();
  std::int64_t t = 0;
  for (std::int64_t d : Delays(5000)) {
    c.OnAck({d, kRtt}, SimTime::Micros(t += 1000));
    EXPECT_LE(c.cwnd() - prev, 1.0 / prev + 1e-12);
    prev = c.cwnd();
  }
  EXPECT_EQ(c.ramp_violations(), 0u);
  EXPECT_EQ(c.linear_acks(), 5000u);
}

TEST_P(LedbatPropertyTest, BaseNeverExceedsCurrentDelay) {
  LedbatController c{LedbatConfig{}};
  std::int64_t t = 0;
  for (std::int64_t d : Delays(5000)) {
    c.OnAck({d, kRtt}, SimTime::Micros(t += 100'000));
    EXPECT_LE(*c.base_delay_us(), c.current_delay_us());
    EXPECT_GE(c.queuing_delay_us(), 0);
  }
  EXPECT_EQ(c.minimum_violations(), 0u);
}

TEST_P(LedbatPropertyTest, ClockOffsetDoesNotChangeWindow) {
  constexpr std::int64_t kOffset = 3'600'000'000;
  LedbatController plain{LedbatConfig{}};
  LedbatController shifted{LedbatConfig{}};
  std::int64_t t = 0;
  for (std::int64_t d : Delays(3000)) {
    t += 20'000;
    plain.OnAck({d, kRtt}, SimTime::Micros(t));
    shifted.OnAck({d + kOffset, kRtt}, SimTime::Micros(t));
    ASSERT_EQ(plain.cwnd(), shifted.cwnd());
    ASSERT_EQ(plain.queuing_delay_us(), shifted.queuing_delay_us());
  }
}

// With the estimator pinned to zero and GAIN = 1/TARGET, every linear step is
// exactly +1/cwnd, which is TCP congestion avoidance.
TEST_P(LedbatPropertyTest, PinnedEstimatorMatchesTcp) {
  LedbatConfig cfg;
  cfg.pin_queuing_delay_zero = true;
  cfg.pacing = false;
  LedbatController ledbat(cfg);
  TcpController tcp(TcpConfig{});
  std::mt19937_64 gen(GetParam());
  std::int64_t t = 0;
  for (std::int64_t d : Delays(3000)) {
    t += 1000;
    if (gen() % 200 == 0) {
      const LossSignal loss{kRtt, SimTime::Micros(t - 1), false};
      ASSERT_EQ(ledbat.OnLoss(loss, SimTime::Micros(t)), tcp.OnLoss(loss, SimTime::Micros(t)));
    } else {
      ledbat.OnAck({d, kRtt}, SimTime::Micros(t));
      tcp.OnAck({d, kRtt}, SimTime::Micros(t));
    }
    ASSERT_EQ(ledbat.cwnd(), tcp.cwnd());
  }
}

INSTANTIATE_TEST_SUITE_P(Seeds, LedbatPropertyTest, ::testing::Values(1u, 2u, 3u, 17u, 99u));

}  // namespace
}  // namespace ledsim
