#include "ledsim/ledbat.h"

#include <algorithm>
#include <cmath>
#include <string>

namespace ledsim {

void LedbatConfig::Validate() const {
  if (target_us <= 0) throw ConfigError("target must be positive");
  const Gain g = gain();
  if (g.num <= 0 || g.den_us <= 0) throw ConfigError("gain must be a positive rational");
  if (!(min_cwnd_pkts > 0)) throw ConfigError("min_cwnd must be positive");
  if (initial_cwnd_pkts < min_cwnd_pkts) throw ConfigError("initial_cwnd below min_cwnd");
  if (base_histo_minutes < 2 || base_histo_minutes > 10) {
    throw ConfigError("base_histo_min must be in [2, 10], got " +
                      std::to_string(base_histo_minutes));
  }
}

BaseDelayHistory::BaseDelayHistory(int minutes, SimTime slot_width)
    : minutes_(minutes), slot_width_(slot_width) {}

void BaseDelayHistory::Update(std::int64_t measured_delay_us, SimTime now) {
  const std::int64_t index = now.us() / slot_width_.us();
  if (slots_.empty() || slots_.back().index != index) {
    slots_.push_back({index, measured_delay_us});
  } else {
    slots_.back().min_delay_us = std::min(slots_.back().min_delay_us, measured_delay_us);
  }
  while (slots_.front().index <= index - minutes_) slots_.pop_front();
}

std::optional<std::int64_t> BaseDelayHistory::base_delay_us() const {
  if (slots_.empty()) return std::nullopt;
  std::int64_t best = slots_.front().min_delay_us;
  for (const Slot& s : slots_) best = std::min(best, s.min_delay_us);
  return best;
}

SimTime PacingGap(double cwnd_pkts, SimTime rtt_est, bool paced) {
  if (!paced || rtt_est <= SimTime::Zero()) return SimTime::Zero();
  const auto gap = std::llround(static_cast<double>(rtt_est.us()) / cwnd_pkts);
  return SimTime::Micros(std::max<long long>(gap, 1));
}

LedbatController::LedbatController(LedbatConfig config)
    : config_(config),
      gain_(config.gain()),
      cwnd_(config.initial_cwnd_pkts),
      ss_active_(config.slow_start),
      history_(config.base_histo_minutes) {
  config_.Validate();
}

void LedbatController::OnAck(const AckSample& sample, SimTime now) {
  current_delay_us_ = sample.measured_delay_us;
  history_.Update(current_delay_us_, now);
  const std::int64_t base = *history_.base_delay_us();
  if (base > current_delay_us_) ++minimum_violations_;
  queuing_delay_us_ = config_.pin_queuing_delay_zero ? 0 : current_delay_us_ - base;

  if (ss_active_) {
    cwnd_ += 1.0;
    if (cwnd_ > ssthresh_) ss_active_ = false;
    return;
  }

  // cwnd += GAIN * off_target / cwnd, with GAIN * off_target formed exactly
  // before the single division by the window.
  const std::int64_t off_target = config_.target_us - queuing_delay_us_;
  const double scaled = static_cast<double>(gain_.num * off_target) /
                        static_cast<double>(gain_.den_us);
  const double increment = scaled / cwnd_;
  ++linear_acks_;
  if (increment > 1.0 / cwnd_) ++ramp_violations_;
  cwnd_ = std::max(cwnd_ + increment, config_.min_cwnd_pkts);
}

bool LedbatController::OnLoss(const LossSignal& loss, SimTime now) {
  if (!gate_.TryHalve(loss, now)) return false;
  if (ss_active_) {
    ssthresh_ = cwnd_ / 2.0;
    cwnd_ = config_.min_cwnd_pkts;
  } else {
    cwnd_ = std::max(cwnd_ / 2.0, config_.min_cwnd_pkts);
  }
  return true;
}

SimTime LedbatController::SendGap(SimTime rtt_est) const {
  return PacingGap(cwnd_, rtt_est, config_.pacing);
}

}  // namespace ledsim
