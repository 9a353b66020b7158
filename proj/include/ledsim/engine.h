#ifndef LEDSIM_ENGINE_H_
#define LEDSIM_ENGINE_H_

#include <array>
#include <cstdint>
#include <functional>
#include <queue>
#include <stdexcept>
#include <vector>

#include "ledsim/packet.h"
#include "ledsim/sim_time.h"

namespace ledsim {

enum class EventKind : std::uint8_t {
  kPacketArrival,    // data at a receiver or ack at a sender
  kLinkServiceDone,  // bottleneck finished transmitting the head packet
  kPacingTimer,
  kFlowStart,
  kSimEnd,
  kStatsSample,
  kSafetyTimer,  // coarse retransmission timeout
};
inline constexpr std::size_t kNumEventKinds = 7;

struct Event {
  SimTime fire_at;
  std::uint64_t seq = 0;  // assigned by the engine at schedule time
  EventKind kind = EventKind::kSimEnd;
  FlowId flow_id = -1;
  Packet packet;  // kPacketArrival only
};

// Opaque handle for cancellation. Wraps the event's insertion sequence.
class EventHandle {
 public:
  EventHandle() = default;
  bool valid() const { return seq_ != kInvalid; }
  std::uint64_t seq() const { return seq_; }

 private:
  friend class Engine;
  static constexpr std::uint64_t kInvalid = ~std::uint64_t{0};
  explicit EventHandle(std::uint64_t seq) : seq_(seq) {}
  std::uint64_t seq_ = kInvalid;
};

class SchedulingInPast : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

struct RunSummary {
  std::uint64_t events_dispatched = 0;
  SimTime final_clock;
  bool operator==(const RunSummary&) const = default;
};

// Deterministic discrete-event scheduler. Events are ordered by
// (fire_at, seq) where seq is a global insertion counter, so events with the
// same fire time run in the order they were scheduled.
class Engine {
 public:
  using Handler = std::function<void(const Event&)>;

  Engine() = default;
  Engine(const Engine&) = delete;
  Engine& operator=(const Engine&) = delete;

  void SetHandler(EventKind kind, Handler handler);

  // Throws SchedulingInPast if ev.fire_at < Now().
  EventHandle Schedule(Event ev);
  EventHandle ScheduleAt(SimTime at, EventKind kind, FlowId flow = -1);

  // True iff the event was pending and is now removed.
  bool Cancel(EventHandle h);

  // Dispatches every pending event with fire_at <= until in order. The clock
  // ends at the time of the last dispatched event (never beyond until).
  RunSummary Run(SimTime until);

  // Makes the current Run() return after the event being dispatched.
  void Stop() { stopped_ = true; }

  SimTime Now() const { return now_; }
  std::size_t PendingCount() const { return pending_; }

 private:
  struct Later {
    bool operator()(const Event& a, const Event& b) const {
      if (a.fire_at != b.fire_at) return a.fire_at > b.fire_at;
      return a.seq > b.seq;
    }
  };
  enum class State : std::uint8_t { kPending, kDone };

  std::priority_queue<Event, std::vector<Event>, Later> heap_;
  std::vector<State> state_;  // indexed by seq
  std::array<Handler, kNumEventKinds> handlers_;
  SimTime now_;
  std::uint64_t next_seq_ = 0;
  std::size_t pending_ = 0;
  bool stopped_ = false;
};

}  // namespace ledsim

#endif  // LEDSIM_ENGINE_H_
