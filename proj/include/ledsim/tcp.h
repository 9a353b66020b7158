#ifndef LEDSIM_TCP_H_
#define LEDSIM_TCP_H_

#include <cstdint>
#include <limits>

#include "ledsim/transport.h"

namespace ledsim {

struct TcpConfig {
  bool slow_start = false;
  double initial_cwnd_pkts = 1.0;
  std::int64_t clock_offset_us = 0;  // sender clock
};

// Idealized Reno-style AIMD: +1/cwnd per ack in congestion avoidance, +1 per
// ack in slow-start, halve at most once per RTT. No fast-recovery inflation,
// no delayed acks, never paced.
class TcpController : public WindowController {
 public:
  explicit TcpController(TcpConfig config);

  void OnAck(const AckSample& sample, SimTime now) override;
  bool OnLoss(const LossSignal& loss, SimTime now) override;
  double cwnd() const override { return cwnd_; }
  SimTime SendGap(SimTime) const override { return SimTime::Zero(); }

  double ssthresh() const { return ssthresh_; }
  bool ss_active() const { return ss_active_; }
  const HalvingGate& halving() const { return gate_; }

 private:
  double cwnd_;
  double ssthresh_ = std::numeric_limits<double>::infinity();
  bool ss_active_;
  HalvingGate gate_;
};

}  // namespace ledsim

#endif  // LEDSIM_TCP_H_
