#ifndef LEDSIM_NETWORK_H_
#define LEDSIM_NETWORK_H_

#include <cstdint>
#include <deque>
#include <functional>
#include <optional>

#include "ledsim/engine.h"
#include "ledsim/packet.h"
#include "ledsim/sim_time.h"

namespace ledsim {

// Time to serialize `bytes` on a link of `capacity_bps`, rounded up to a
// whole microsecond.
SimTime TransmissionTime(std::uint32_t bytes, std::int64_t capacity_bps);

// Queuing delay `delay` expressed in packets of `packet_bytes` on a link of
// `capacity_bps` (tau_P = tau_T * C / 8P).
double DelayInPackets(SimTime delay, std::int64_t capacity_bps,
                      std::uint32_t packet_bytes);

struct BottleneckConfig {
  std::int64_t capacity_bps = 10'000'000;
  SimTime prop_delay = SimTime::Micros(23'800);
  int buffer_pkts = 40;
};

struct LinkCounters {
  // Every data packet offered to the link, accepted or not.
  std::uint64_t enqueued = 0;
  std::uint64_t dropped = 0;
  // Packets whose transmission has completed.
  std::uint64_t delivered = 0;
  std::uint64_t bytes_delivered = 0;
};

// Optional observers, called synchronously.
struct LinkHooks {
  std::function<void(const Packet&, SimTime)> on_accept;
  std::function<void(const Packet&, SimTime)> on_drop;
  std::function<void(const Packet&, SimTime)> on_departure;
};

// Drop-tail FIFO in front of a constant-rate transmitter, followed by a fixed
// propagation delay. The packet in service does not count against the buffer.
// Delivered packets are scheduled as kPacketArrival events on the engine.
class Bottleneck {
 public:
  enum class EnqueueResult { kAccepted, kDropped };

  Bottleneck(Engine& engine, BottleneckConfig config);

  EnqueueResult Enqueue(Packet pkt);

  // Handler for kLinkServiceDone.
  void OnServiceComplete();

  // Remaining service of the head packet plus serialization of everything
  // queued behind it. For tracing only.
  SimTime QueuingDelayNow() const;

  std::size_t QueueLength() const { return queue_.size(); }
  bool Busy() const { return in_service_.has_value(); }
  const LinkCounters& counters() const { return counters_; }
  const BottleneckConfig& config() const { return config_; }

  // enqueued == delivered + dropped + queued + in service.
  bool ConservationHolds() const;

  void set_hooks(LinkHooks hooks) { hooks_ = std::move(hooks); }

 private:
  void StartService(Packet pkt);

  Engine& engine_;
  BottleneckConfig config_;
  std::deque<Packet> queue_;
  std::optional<Packet> in_service_;
  SimTime service_ends_at_;
  std::uint64_t queued_bytes_ = 0;
  LinkCounters counters_;
  LinkHooks hooks_;
};

// Reverse path for acks: never drops or reorders, fixed delay.
class AckPath {
 public:
  AckPath(Engine& engine, SimTime delay) : engine_(engine), delay_(delay) {}

  void Send(Packet ack);
  SimTime delay() const { return delay_; }

 private:
  Engine& engine_;
  SimTime delay_;
};

}  // namespace ledsim

#endif  // LEDSIM_NETWORK_H_
