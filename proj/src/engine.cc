#include "ledsim/engine.h"

#include <cmath>
#include <string>
#include <utility>

namespace ledsim {

SimTime SecondsToSimTime(double seconds) {
  return SimTime::Micros(std::llround(seconds * 1e6));
}

void Engine::SetHandler(EventKind kind, Handler handler) {
  handlers_[static_cast<std::size_t>(kind)] = std::move(handler);
}

EventHandle Engine::Schedule(Event ev) {
  if (ev.fire_at < now_) {
    throw SchedulingInPast("event at " + std::to_string(ev.fire_at.us()) +
                           " us scheduled while clock is " +
                           std::to_string(now_.us()) + " us");
  }
  ev.seq = next_seq_++;
  state_.push_back(State::kPending);
  ++pending_;
  EventHandle h(ev.seq);
  heap_.push(std::move(ev));
  return h;
}

EventHandle Engine::ScheduleAt(SimTime at, EventKind kind, FlowId flow) {
  Event ev;
  ev.fire_at = at;
  ev.kind = kind;
  ev.flow_id = flow;
  return Schedule(std::move(ev));
}

bool Engine::Cancel(EventHandle h) {
  if (!h.valid() || h.seq() >= state_.size()) return false;
  if (state_[h.seq()] != State::kPending) return false;
  // The heap entry stays behind and is skipped when popped.
  state_[h.seq()] = State::kDone;
  --pending_;
  return true;
}

RunSummary Engine::Run(SimTime until) {
  RunSummary summary;
  stopped_ = false;
  while (!heap_.empty() && !stopped_) {
    if (heap_.top().fire_at > until) break;
    Event ev = heap_.top();
    heap_.pop();
    if (state_[ev.seq] != State::kPending) continue;
    state_[ev.seq] = State::kDone;
    --pending_;
    now_ = ev.fire_at;
    ++summary.events_dispatched;
    const Handler& handler = handlers_[static_cast<std::size_t>(ev.kind)];
    if (handler) handler(ev);
  }
  summary.final_clock = now_;
  return summary;
}

}  // namespace ledsim
