#include "ledsim/transport.h"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "ledsim/network.h"

namespace ledsim {
namespace {

Packet DataAt(std::uint64_t seq, std::int64_t stamp) {
  Packet p;
  p.seq = seq;
  p.size_bytes = 1500;
  p.tx_index = seq;
  p.sent_at_sender_clock = stamp;
  return p;
}

TEST(ReceiverTest, MeasuredDelayIsLocalMinusStamp) {
  Receiver rx;
  const Packet ack = rx.OnData(DataAt(1, 0), SimTime::Micros(26'200));
  EXPECT_TRUE(ack.is_ack);
  EXPECT_EQ(ack.measured_delay_us, 26'200);
  EXPECT_EQ(ack.ack_of_seq, 1u);
  EXPECT_EQ(ack.echo_seq, 1u);
  EXPECT_EQ(ack.echo_tx_index, 1u);
  EXPECT_EQ(ack.echo_timestamp, 0);
}

TEST(ReceiverTest, ClockOffsetShiftsMeasurement) {
  constexpr std::int64_t kHour = 3'600'000'000;
  Receiver plain;
  Receiver shifted(kHour);
  const auto a = plain.OnData(DataAt(1, 500), SimTime::Micros(30'000));
  const auto b = shifted.OnData(DataAt(1, 500), SimTime::Micros(30'000));
  EXPECT_EQ(b.measured_delay_us - a.measured_delay_us, kHour);
}

TEST(ReceiverTest, GapRepeatsCumulativeAck) {
  Receiver rx;
  EXPECT_EQ(rx.OnData(DataAt(1, 0), SimTime::Zero()).ack_of_seq, 1u);
  EXPECT_EQ(rx.OnData(DataAt(3, 0), SimTime::Zero()).ack_of_seq, 1u);
  EXPECT_EQ(rx.OnData(DataAt(4, 0), SimTime::Zero()).ack_of_seq, 1u);
  EXPECT_EQ(rx.OnData(DataAt(2, 0), SimTime::Zero()).ack_of_seq, 4u);
  EXPECT_EQ(rx.packets_received(), 4u);
}

// One packet through a link whose propagation delay alone is 25 ms: the
// receiver sees 25 ms plus one 1200 us serialization.
TEST(ReceiverTest, OneWayDelayThroughLink) {
  Engine engine;
  Bottleneck link(engine, {10'000'000, SimTime::Millis(25), 40});
  Receiver rx;
  std::int64_t measured = -1;
  engine.SetHandler(EventKind::kLinkServiceDone, [&](const Event&) { link.OnServiceComplete(); });
  engine.SetHandler(EventKind::kPacketArrival,
                    [&](const Event& ev) { measured = rx.OnData(ev.packet, engine.Now()).measured_delay_us; });
  link.Enqueue(DataAt(1, 0));
  engine.Run(SimTime::Seconds(1));
  EXPECT_EQ(measured, 26'200);
}

TEST(HalvingGateTest, AtMostOncePerRtt) {
  HalvingGate gate;
  const SimTime rtt = SimTime::Millis(50);
  EXPECT_TRUE(gate.TryHalve({rtt, SimTime::Millis(90), false}, SimTime::Millis(100)));
  EXPECT_FALSE(gate.TryHalve({rtt, SimTime::Millis(105), false}, SimTime::Millis(110)));
  EXPECT_TRUE(gate.TryHalve({rtt, SimTime::Millis(120), false}, SimTime::Millis(150)));
  ASSERT_EQ(gate.history().size(), 2u);
  EXPECT_EQ(gate.last_halving_at(), SimTime::Millis(150));
}

TEST(HalvingGateTest, LossFromAlreadyCutWindowIsIgnored) {
  HalvingGate gate;
  const SimTime rtt = SimTime::Millis(50);
  EXPECT_TRUE(gate.TryHalve({rtt, SimTime::Millis(0), false}, SimTime::Millis(100)));
  // Sent before the previous cut: same congestion episode.
  EXPECT_FALSE(gate.TryHalve({rtt, SimTime::Millis(80), false}, SimTime::Millis(200)));
  // A timeout is its own signal.
  EXPECT_TRUE(gate.TryHalve({rtt, SimTime::Millis(80), true}, SimTime::Millis(200)));
}

class FixedWindow : public WindowController {
 public:
  explicit FixedWindow(double cwnd, SimTime gap = SimTime::Zero()) : cwnd_(cwnd), gap_(gap) {}
  void OnAck(const AckSample& s, SimTime) override {
    ++acks;
    last_rtt = s.rtt_est;
  }
  bool OnLoss(const LossSignal& l, SimTime) override {
    losses.push_back(l);
    return true;
  }
  double cwnd() const override { return cwnd_; }
  SimTime SendGap(SimTime) const override { return gap_; }

  int acks = 0;
  SimTime last_rtt;
  std::vector<LossSignal> losses;

 private:
  double cwnd_;
  SimTime gap_;
};

class SenderTest : public ::testing::Test {
 protected:
  FixedWindow* Make(double cwnd, SimTime gap = SimTime::Zero()) {
    auto c = std::make_unique<FixedWindow>(cwnd, gap);
    FixedWindow* raw = c.get();
    sender_ = std::make_unique<Sender>(engine_, SenderConfig{}, std::move(c),
                                       [this](Packet p) { sent_.push_back({engine_.Now(), p}); });
    engine_.SetHandler(EventKind::kPacingTimer, [this](const Event&) { sender_->OnPacingTimer(); });
    engine_.SetHandler(EventKind::kSafetyTimer, [this](const Event&) { sender_->OnSafetyTimer(); });
    engine_.SetHandler(EventKind::kPacketArrival, [this](const Event& ev) { sender_->OnAck(ev.packet); });
    return raw;
  }

  void AckAt(SimTime at, const Packet& data, std::uint64_t cumulative) {
    Event ev;
    ev.fire_at = at;
    ev.kind = EventKind::kPacketArrival;
    ev.packet.is_ack = true;
    ev.packet.ack_of_seq = cumulative;
    ev.packet.echo_seq = data.seq;
    ev.packet.echo_tx_index = data.tx_index;
    ev.packet.echo_timestamp = data.sent_at_sender_clock;
    engine_.Schedule(ev);
  }

  struct Sent {
    SimTime at;
    Packet pkt;
  };
  Engine engine_;
  std::unique_ptr<Sender> sender_;
  std::vector<Sent> sent_;
};

TEST_F(SenderTest, SendsWholeWindowOnlyWhenRoomForAPacket) {
  Make(3.7);
  sender_->Start();
  EXPECT_EQ(sent_.size(), 3u);
  EXPECT_EQ(sender_->flightsize(), 3u);
  EXPECT_LE(static_cast<double>(sender_->flightsize()), std::ceil(3.7));
}

TEST_F(SenderTest, PacedSendsAreSpaced) {
  Make(4, SimTime::Micros(5000));
  sender_->Start();
  engine_.Run(SimTime::Millis(900));
  ASSERT_EQ(sent_.size(), 4u);
  for (std::size_t i = 1; i < sent_.size(); ++i) {
    EXPECT_EQ(sent_[i].at - sent_[i - 1].at, SimTime::Micros(5000));
  }
}

TEST_F(SenderTest, RttEstimateIsEighthWeightedAverage) {
  FixedWindow* c = Make(2);
  sender_->Start();
  AckAt(SimTime::Millis(50), sent_[0].pkt, 1);
  AckAt(SimTime::Millis(90), sent_[1].pkt, 2);
  engine_.Run(SimTime::Millis(90));
  // Samples 50 ms then 90 ms: 50 then (7*50 + 90) / 8 = 55 ms.
  EXPECT_EQ(sender_->rtt_est(), SimTime::Millis(55));
  EXPECT_EQ(c->last_rtt, SimTime::Millis(55));
}

TEST_F(SenderTest, ThirdLaterAckDeclaresLossAndRetransmits) {
  FixedWindow* c = Make(5);
  sender_->Start();
  ASSERT_EQ(sent_.size(), 5u);
  // seq 1 is lost; 2, 3, 4 arrive.
  AckAt(SimTime::Millis(50), sent_[1].pkt, 0);
  AckAt(SimTime::Millis(51), sent_[2].pkt, 0);
  engine_.Run(SimTime::Millis(51));
  EXPECT_TRUE(c->losses.empty());
  AckAt(SimTime::Millis(52), sent_[3].pkt, 0);
  engine_.Run(SimTime::Millis(52));
  ASSERT_EQ(c->losses.size(), 1u);
  EXPECT_FALSE(c->losses[0].timeout);
  EXPECT_EQ(c->losses[0].lost_packet_sent, SimTime::Zero());
  EXPECT_EQ(sender_->dupack_count(), 3u);
  // The freed window slots go to the retransmission first.
  bool retransmitted = false;
  for (const Sent& s : sent_) {
    if (s.pkt.is_retransmission) {
      EXPECT_EQ(s.pkt.seq, 1u);
      retransmitted = true;
    }
  }
  EXPECT_TRUE(retransmitted);
  EXPECT_EQ(sender_->retransmissions(), 1u);
}

TEST_F(SenderTest, SafetyTimeoutWritesOffEverything) {
  FixedWindow* c = Make(2);
  sender_->Start();
  engine_.Run(SimTime::Seconds(5));
  ASSERT_GE(c->losses.size(), 1u);
  EXPECT_TRUE(c->losses[0].timeout);
  EXPECT_GE(sender_->timeouts(), 1u);
  // The first timeout fires after the 1 s floor.
  ASSERT_GT(sent_.size(), 2u);
  EXPECT_EQ(sent_[2].at, SimTime::Seconds(1));
  EXPECT_TRUE(sent_[2].pkt.is_retransmission);
}

}  // namespace
}  // namespace ledsim
