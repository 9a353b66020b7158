#include "ledsim/transport.h"

#include <algorithm>
#include <cassert>
#include <utility>

namespace ledsim {

bool HalvingGate::TryHalve(const LossSignal& loss, SimTime now) {
  if (last_) {
    if (now - *last_ < loss.rtt_est) return false;
    if (!loss.timeout && loss.lost_packet_sent < *last_) return false;
  }
  last_ = now;
  history_.push_back({now, loss.rtt_est});
  return true;
}

Packet Receiver::OnData(const Packet& data, SimTime local_clock) {
  assert(!data.is_ack);
  ++received_;
  if (data.seq == cumulative_ + 1) {
    ++cumulative_;
    while (!out_of_order_.empty() && *out_of_order_.begin() == cumulative_ + 1) {
      out_of_order_.erase(out_of_order_.begin());
      ++cumulative_;
    }
  } else if (data.seq > cumulative_ + 1) {
    out_of_order_.insert(data.seq);
  }

  Packet ack;
  ack.flow_id = data.flow_id;
  ack.is_ack = true;
  ack.size_bytes = 40;
  ack.ack_of_seq = cumulative_;
  ack.measured_delay_us = local_clock.us() + clock_offset_us_ - data.sent_at_sender_clock;
  ack.echo_seq = data.seq;
  ack.echo_tx_index = data.tx_index;
  ack.echo_timestamp = data.sent_at_sender_clock;
  return ack;
}

Sender::Sender(Engine& engine, SenderConfig config, std::unique_ptr<WindowController> controller,
               Output output)
    : engine_(engine),
      config_(config),
      controller_(std::move(controller)),
      output_(std::move(output)) {}

void Sender::Start() {
  started_ = true;
  TrySend();
}

void Sender::TrySend() {
  const SimTime now = engine_.Now();
  while (controller_->cwnd() - static_cast<double>(outstanding_.size()) >= 1.0) {
    if (now < next_send_allowed_) {
      if (!pacing_timer_armed_ || pacing_timer_at_ != next_send_allowed_) {
        if (pacing_timer_armed_) engine_.Cancel(pacing_timer_);
        pacing_timer_ = engine_.ScheduleAt(next_send_allowed_, EventKind::kPacingTimer,
                                           config_.flow_id);
        pacing_timer_at_ = next_send_allowed_;
        pacing_timer_armed_ = true;
      }
      return;
    }
    Transmit();
    next_send_allowed_ = now + controller_->SendGap(rtt_est());
  }
}

void Sender::Transmit() {
  const SimTime now = engine_.Now();
  Packet pkt;
  pkt.flow_id = config_.flow_id;
  pkt.size_bytes = config_.packet_bytes;
  pkt.sent_at_sender_clock = now.us() + config_.clock_offset_us;
  pkt.tx_index = next_tx_index_++;
  if (!retransmit_queue_.empty()) {
    pkt.seq = retransmit_queue_.front();
    retransmit_queue_.pop_front();
    pkt.is_retransmission = true;
    ++retransmissions_;
  } else {
    pkt.seq = next_seq_++;
  }
  if (outstanding_.empty()) last_progress_ = now;
  outstanding_.emplace(pkt.tx_index, Outstanding{pkt.seq, now, 0});
  ArmSafetyTimer();
  output_(std::move(pkt));
}

void Sender::UpdateRtt(SimTime sample) {
  if (!rtt_est_) {
    rtt_est_ = sample;
  } else {
    rtt_est_ = SimTime::Micros((7 * rtt_est_->us() + sample.us()) / 8);
  }
  max_rtt_ = std::max(max_rtt_, sample);
}

void Sender::OnAck(const Packet& ack) {
  assert(ack.is_ack);
  const SimTime now = engine_.Now();

  if (ack.ack_of_seq > highest_cumulative_) {
    highest_cumulative_ = ack.ack_of_seq;
    dupack_count_ = 0;
  } else {
    ++dupack_count_;
  }

  auto it = outstanding_.find(ack.echo_tx_index);
  if (it == outstanding_.end()) return;  // already written off by a timeout
  outstanding_.erase(it);
  last_progress_ = now;

  const std::int64_t local_now = now.us() + config_.clock_offset_us;
  UpdateRtt(SimTime::Micros(local_now - ack.echo_timestamp));
  controller_->OnAck(AckSample{ack.measured_delay_us, rtt_est()}, now);

  // Everything sent before the acked transmission and still outstanding was
  // overtaken; it can only have been dropped.
  for (auto hole = outstanding_.begin();
       hole != outstanding_.end() && hole->first < ack.echo_tx_index;) {
    if (++hole->second.later_acked >= config_.dupack_threshold) {
      const SimTime sent_at = hole->second.sent_at;
      retransmit_queue_.push_back(hole->second.seq);
      hole = outstanding_.erase(hole);
      Loss(sent_at, /*timeout=*/false);
    } else {
      ++hole;
    }
  }
  TrySend();
}

void Sender::Loss(SimTime sent_at, bool timeout) {
  const bool reduced = controller_->OnLoss(LossSignal{rtt_est(), sent_at, timeout}, engine_.Now());
  if (hooks_.on_loss) hooks_.on_loss(config_.flow_id, engine_.Now(), timeout, reduced);
}

void Sender::OnPacingTimer() {
  pacing_timer_armed_ = false;
  TrySend();
}

void Sender::ArmSafetyTimer() {
  if (safety_timer_armed_ || outstanding_.empty()) return;
  const SimTime interval =
      std::max(config_.min_safety_timeout, SimTime::Micros(2 * max_rtt_.us()));
  engine_.ScheduleAt(last_progress_ + interval, EventKind::kSafetyTimer, config_.flow_id);
  safety_timer_armed_ = true;
}

void Sender::OnSafetyTimer() {
  safety_timer_armed_ = false;
  if (outstanding_.empty()) return;
  const SimTime now = engine_.Now();
  const SimTime interval =
      std::max(config_.min_safety_timeout, SimTime::Micros(2 * max_rtt_.us()));
  if (now - last_progress_ < interval) {
    ArmSafetyTimer();
    return;
  }
  ++timeouts_;
  SimTime oldest = now;
  std::vector<std::uint64_t> lost;
  for (const auto& [tx, o] : outstanding_) {
    lost.push_back(o.seq);
    oldest = std::min(oldest, o.sent_at);
  }
  outstanding_.clear();
  std::sort(lost.begin(), lost.end());
  retransmit_queue_.insert(retransmit_queue_.begin(), lost.begin(), lost.end());
  last_progress_ = now;
  Loss(oldest, /*timeout=*/true);
  TrySend();
}

}  // namespace ledsim
