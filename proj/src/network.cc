#include "ledsim/network.h"

#include <cassert>
#include <stdexcept>
#include <utility>

namespace ledsim {

SimTime TransmissionTime(std::uint32_t bytes, std::int64_t capacity_bps) {
  const std::int64_t bits_us = static_cast<std::int64_t>(bytes) * 8 * 1'000'000;
  return SimTime::Micros((bits_us + capacity_bps - 1) / capacity_bps);
}

double DelayInPackets(SimTime delay, std::int64_t capacity_bps,
                      std::uint32_t packet_bytes) {
  return static_cast<double>(delay.us()) * static_cast<double>(capacity_bps) /
         (8.0 * 1e6 * static_cast<double>(packet_bytes));
}

Bottleneck::Bottleneck(Engine& engine, BottleneckConfig config)
    : engine_(engine), config_(config) {
  if (config_.capacity_bps <= 0) throw std::invalid_argument("capacity_bps must be positive");
  if (config_.buffer_pkts <= 0) throw std::invalid_argument("buffer_pkts must be positive");
  if (config_.prop_delay < SimTime::Zero()) throw std::invalid_argument("negative prop_delay");
}

Bottleneck::EnqueueResult Bottleneck::Enqueue(Packet pkt) {
  assert(!pkt.is_ack);
  const SimTime now = engine_.Now();
  ++counters_.enqueued;
  if (!in_service_) {
    pkt.enqueued_at = now;
    if (hooks_.on_accept) hooks_.on_accept(pkt, now);
    StartService(std::move(pkt));
    return EnqueueResult::kAccepted;
  }
  if (queue_.size() >= static_cast<std::size_t>(config_.buffer_pkts)) {
    ++counters_.dropped;
    if (hooks_.on_drop) hooks_.on_drop(pkt, now);
    return EnqueueResult::kDropped;
  }
  pkt.enqueued_at = now;
  if (hooks_.on_accept) hooks_.on_accept(pkt, now);
  queued_bytes_ += pkt.size_bytes;
  queue_.push_back(std::move(pkt));
  return EnqueueResult::kAccepted;
}

void Bottleneck::StartService(Packet pkt) {
  service_ends_at_ = engine_.Now() + TransmissionTime(pkt.size_bytes, config_.capacity_bps);
  in_service_ = std::move(pkt);
  engine_.ScheduleAt(service_ends_at_, EventKind::kLinkServiceDone);
}

void Bottleneck::OnServiceComplete() {
  assert(in_service_);
  const SimTime now = engine_.Now();
  Event delivery;
  delivery.fire_at = now + config_.prop_delay;
  delivery.kind = EventKind::kPacketArrival;
  delivery.flow_id = in_service_->flow_id;
  delivery.packet = std::move(*in_service_);
  in_service_.reset();

  ++counters_.delivered;
  counters_.bytes_delivered += delivery.packet.size_bytes;
  if (hooks_.on_departure) hooks_.on_departure(delivery.packet, now);
  engine_.Schedule(std::move(delivery));

  if (!queue_.empty()) {
    Packet next = std::move(queue_.front());
    queue_.pop_front();
    queued_bytes_ -= next.size_bytes;
    StartService(std::move(next));
  }
}

SimTime Bottleneck::QueuingDelayNow() const {
  if (!in_service_) return SimTime::Zero();
  const SimTime residual = service_ends_at_ - engine_.Now();
  const std::int64_t bits_us = static_cast<std::int64_t>(queued_bytes_) * 8 * 1'000'000;
  return residual + SimTime::Micros(bits_us / config_.capacity_bps);
}

bool Bottleneck::ConservationHolds() const {
  const std::uint64_t inside = queue_.size() + (in_service_ ? 1 : 0);
  return counters_.enqueued == counters_.delivered + counters_.dropped + inside;
}

void AckPath::Send(Packet ack) {
  assert(ack.is_ack);
  Event ev;
  ev.fire_at = engine_.Now() + delay_;
  ev.kind = EventKind::kPacketArrival;
  ev.flow_id = ack.flow_id;
  ev.packet = std::move(ack);
  engine_.Schedule(std::move(ev));
}

}  // namespace ledsim
