#ifndef LEDSIM_TRANSPORT_H_
#define LEDSIM_TRANSPORT_H_

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <vector>

#include "ledsim/engine.h"
#include "ledsim/packet.h"
#include "ledsim/sim_time.h"

namespace ledsim {

// What a window controller learns from one acknowledged data packet.
struct AckSample {
  std::int64_t measured_delay_us = 0;
  SimTime rtt_est;  // smoothed, already updated with this ack
};

struct LossSignal {
  SimTime rtt_est;           // zero before the first sample
  SimTime lost_packet_sent;  // when the lost transmission left the sender
  bool timeout = false;
};

// Congestion-window policy plugged into a Sender.
class WindowController {
 public:
  virtual ~WindowController() = default;
  virtual void OnAck(const AckSample& sample, SimTime now) = 0;
  // Returns true if the window was reduced.
  virtual bool OnLoss(const LossSignal& loss, SimTime now) = 0;
  virtual double cwnd() const = 0;
  // Minimum spacing between consecutive transmissions; zero sends the
  // window back-to-back.
  virtual SimTime SendGap(SimTime rtt_est) const = 0;
};

// Enforces "at most one window reduction per RTT". A reduction is allowed when
// at least rtt_est has passed since the previous one and the lost packet was
// sent after it (losses from a window that was already cut do not count twice).
class HalvingGate {
 public:
  struct Record {
    SimTime at;
    SimTime rtt_est;
  };

  bool TryHalve(const LossSignal& loss, SimTime now);
  std::optional<SimTime> last_halving_at() const { return last_; }
  const std::vector<Record>& history() const { return history_; }

 private:
  std::optional<SimTime> last_;
  std::vector<Record> history_;
};

// Receiver side: stamps each ack with the one-way delay measured against the
// local clock and a cumulative ack number. One ack per data packet.
class Receiver {
 public:
  explicit Receiver(std::int64_t clock_offset_us = 0) : clock_offset_us_(clock_offset_us) {}

  Packet OnData(const Packet& data, SimTime local_clock);

  std::uint64_t cumulative_ack() const { return cumulative_; }
  std::uint64_t packets_received() const { return received_; }

 private:
  std::int64_t clock_offset_us_;
  std::uint64_t cumulative_ = 0;
  std::set<std::uint64_t> out_of_order_;
  std::uint64_t received_ = 0;
};

struct SenderConfig {
  FlowId flow_id = 0;
  std::uint32_t packet_bytes = 1500;
  std::int64_t clock_offset_us = 0;
  SimTime min_safety_timeout = SimTime::Seconds(1);
  int dupack_threshold = 3;
};

struct SenderHooks {
  std::function<void(FlowId, SimTime, bool timeout, bool reduced)> on_loss;
};

// Greedy sender with unlimited data. Keeps a per-transmission scoreboard so
// flightsize is exact; a transmission is declared lost once
// `dupack_threshold` later transmissions have been acknowledged, which for the
// first hole is the classic triple duplicate ack. A coarse timeout
// (max(min_safety_timeout, 2 x max RTT)) covers the case where too few
// packets follow a loss.
class Sender {
 public:
  using Output = std::function<void(Packet)>;

  Sender(Engine& engine, SenderConfig config, std::unique_ptr<WindowController> controller,
         Output output);

  void Start();
  void OnAck(const Packet& ack);
  void OnPacingTimer();
  void OnSafetyTimer();

  void set_hooks(SenderHooks hooks) { hooks_ = std::move(hooks); }

  const WindowController& controller() const { return *controller_; }
  std::size_t flightsize() const { return outstanding_.size(); }
  SimTime rtt_est() const { return rtt_est_.value_or(SimTime::Zero()); }
  std::uint64_t dupack_count() const { return dupack_count_; }
  std::uint64_t packets_sent() const { return next_tx_index_ - 1; }
  std::uint64_t retransmissions() const { return retransmissions_; }
  std::uint64_t timeouts() const { return timeouts_; }
  bool started() const { return started_; }

 private:
  struct Outstanding {
    std::uint64_t seq;
    SimTime sent_at;
    int later_acked = 0;
  };

  void TrySend();
  void Transmit();
  void UpdateRtt(SimTime sample);
  void ArmSafetyTimer();
  void Loss(SimTime sent_at, bool timeout);

  Engine& engine_;
  SenderConfig config_;
  std::unique_ptr<WindowController> controller_;
  Output output_;
  SenderHooks hooks_;

  bool started_ = false;
  std::uint64_t next_seq_ = 1;
  std::uint64_t next_tx_index_ = 1;
  std::map<std::uint64_t, Outstanding> outstanding_;  // keyed by tx_index
  std::deque<std::uint64_t> retransmit_queue_;
  std::uint64_t highest_cumulative_ = 0;
  std::uint64_t dupack_count_ = 0;
  std::uint64_t retransmissions_ = 0;
  std::uint64_t timeouts_ = 0;

  std::optional<SimTime> rtt_est_;
  SimTime max_rtt_;

  SimTime next_send_allowed_;
  EventHandle pacing_timer_;
  SimTime pacing_timer_at_;
  bool pacing_timer_armed_ = false;

  SimTime last_progress_;
  bool safety_timer_armed_ = false;
};

}  // namespace ledsim

#endif  // LEDSIM_TRANSPORT_H_
