#include "ledsim/tcp.h"

#include <algorithm>

namespace ledsim {

TcpController::TcpController(TcpConfig config)
    : cwnd_(std::max(config.initial_cwnd_pkts, 1.0)), ss_active_(config.slow_start) {}

void TcpController::OnAck(const AckSample&, SimTime) {
  if (ss_active_) {
    cwnd_ += 1.0;
    if (cwnd_ > ssthresh_) ss_active_ = false;
  } else {
    cwnd_ += 1.0 / cwnd_;
  }
}

bool TcpController::OnLoss(const LossSignal& loss, SimTime now) {
  if (!gate_.TryHalve(loss, now)) return false;
  ssthresh_ = cwnd_ / 2.0;
  cwnd_ = std::max(cwnd_ / 2.0, 1.0);
  ss_active_ = false;
  return true;
}

}  // namespace ledsim
