#include <algorithm>
#include <memory>
#include <ostream>

#include <fmt/format.h>

#include "ledsim/harness.h"
#include "ledsim/network.h"
#include "ledsim/transport.h"

namespace ledsim {

namespace {

struct FlowState {
  FlowSpec spec;
  SimTime start;
  LedbatController* ledbat = nullptr;  // owned by the sender
  TcpController* tcp = nullptr;
  std::unique_ptr<Sender> sender;
  Receiver receiver;

  const HalvingGate& gate() const { return ledbat ? ledbat->halving() : tcp->halving(); }
};

class Simulation {
 public:
  explicit Simulation(const Scenario& s)
      : scenario_(s),
        starts_(ResolveStarts(s)),
        end_(SecondsToSimTime(s.duration_s)),
        sample_every_(SimTime::Millis(s.sample_ms)),
        link_(engine_, LinkConfig(s)),
        acks_(engine_, SimTime::Micros(s.rtt_base_us / 2)) {
    trace_.capacity_bps = s.capacity_bps;
    trace_.duration = end_;
    for (std::size_t i = 0; i < s.flows.size(); ++i) AddFlow(static_cast<FlowId>(i));
    WireLink();
    WireEngine();
  }

  RunResult Run() {
    for (std::size_t i = 0; i < flows_.size(); ++i) {
      engine_.ScheduleAt(flows_[i].start, EventKind::kFlowStart, static_cast<FlowId>(i));
    }
    engine_.ScheduleAt(SimTime::Zero(), EventKind::kStatsSample);
    engine_.ScheduleAt(end_, EventKind::kSimEnd);

    RunResult result;
    result.summary = engine_.Run(end_);
    result.scenario = scenario_;
    result.starts = starts_;
    result.audit = BuildAudit();
    const SimTime last_start = *std::max_element(starts_.begin(), starts_.end());
    result.trace = std::move(trace_);
    result.report = Evaluate(result.trace, Interval{last_start, end_});
    return result;
  }

 private:
  static BottleneckConfig LinkConfig(const Scenario& s) {
    BottleneckConfig c;
    c.capacity_bps = s.capacity_bps;
    c.buffer_pkts = s.buffer_pkts;
    // Base one-way delay is rtt/2 including one serialization.
    c.prop_delay = SimTime::Micros(s.rtt_base_us / 2) -
                   TransmissionTime(s.packet_bytes, s.capacity_bps);
    return c;
  }

  void AddFlow(FlowId id) {
    FlowState f;
    f.spec = scenario_.flows[static_cast<std::size_t>(id)];
    f.start = starts_[static_cast<std::size_t>(id)];
    f.receiver = Receiver(f.spec.receiver_clock_offset_us);

    std::unique_ptr<WindowController> controller;
    if (f.spec.kind == FlowKind::kLedbat) {
      auto c = std::make_unique<LedbatController>(f.spec.ledbat);
      f.ledbat = c.get();
      controller = std::move(c);
    } else {
      auto c = std::make_unique<TcpController>(f.spec.tcp);
      f.tcp = c.get();
      controller = std::move(c);
    }
    SenderConfig sc;
    sc.flow_id = id;
    sc.packet_bytes = scenario_.packet_bytes;
    sc.clock_offset_us = f.spec.sender_clock_offset_us();
    f.sender = std::make_unique<Sender>(engine_, sc, std::move(controller),
                                        [this](Packet p) { link_.Enqueue(std::move(p)); });
    f.sender->set_hooks(SenderHooks{[this](FlowId flow, SimTime at, bool timeout, bool reduced) {
      const FlowState& fs = flows_[static_cast<std::size_t>(flow)];
      if (timeout) {
        trace_.rows.push_back({at.us(), flow, Series::kTimeout, fs.sender->controller().cwnd()});
      } else if (reduced) {
        trace_.rows.push_back({at.us(), flow, Series::kHalving, fs.sender->controller().cwnd()});
      }
    }});
    trace_.flows.push_back(TraceFlow{f.spec.kind, f.start});
    flows_.push_back(std::move(f));
  }

  void WireLink() {
    auto record = [](const Packet& p, SimTime at) {
      return LinkRecord{at.us(), p.flow_id, p.size_bytes, p.is_retransmission};
    };
    LinkHooks hooks;
    hooks.on_accept = [this, record](const Packet& p, SimTime at) {
      trace_.accepted.push_back(record(p, at));
    };
    hooks.on_drop = [this, record](const Packet& p, SimTime at) {
      trace_.dropped.push_back(record(p, at));
      trace_.rows.push_back({at.us(), kLinkEntity, Series::kDrop, static_cast<double>(p.seq)});
    };
    hooks.on_departure = [this, record](const Packet& p, SimTime at) {
      trace_.departed.push_back(record(p, at));
    };
    link_.set_hooks(std::move(hooks));
  }

  void WireEngine() {
    engine_.SetHandler(EventKind::kPacketArrival, [this](const Event& ev) {
      FlowState& f = flows_[static_cast<std::size_t>(ev.packet.flow_id)];
      if (ev.packet.is_ack) {
        f.sender->OnAck(ev.packet);
      } else {
        acks_.Send(f.receiver.OnData(ev.packet, engine_.Now()));
      }
    });
    engine_.SetHandler(EventKind::kLinkServiceDone,
                       [this](const Event&) { link_.OnServiceComplete(); });
    engine_.SetHandler(EventKind::kPacingTimer,
                       [this](const Event& ev) { Flow(ev).sender->OnPacingTimer(); });
    engine_.SetHandler(EventKind::kSafetyTimer,
                       [this](const Event& ev) { Flow(ev).sender->OnSafetyTimer(); });
    engine_.SetHandler(EventKind::kFlowStart,
                       [this](const Event& ev) { Flow(ev).sender->Start(); });
    engine_.SetHandler(EventKind::kStatsSample, [this](const Event&) {
      Sample();
      const SimTime next = engine_.Now() + sample_every_;
      if (next < end_) engine_.ScheduleAt(next, EventKind::kStatsSample);
    });
    engine_.SetHandler(EventKind::kSimEnd, [this](const Event&) {
      Sample();
      engine_.Stop();
    });
  }

  FlowState& Flow(const Event& ev) { return flows_[static_cast<std::size_t>(ev.flow_id)]; }

  void Sample() {
    const std::int64_t t = engine_.Now().us();
    ++audit_.samples;
    if (!link_.ConservationHolds()) ++audit_.conservation_violations;
    delivered_bytes_.resize(flows_.size(), 0);
    for (; delivered_scan_ < trace_.departed.size(); ++delivered_scan_) {
      const LinkRecord& r = trace_.departed[delivered_scan_];
      delivered_bytes_[static_cast<std::size_t>(r.flow)] += r.bytes;
    }
    for (std::size_t i = 0; i < flows_.size(); ++i) {
      const FlowState& f = flows_[i];
      if (!f.sender->started()) continue;
      const FlowId id = static_cast<FlowId>(i);
      const double cwnd = f.sender->controller().cwnd();
      if (cwnd < 1.0) ++audit_.cwnd_floor_violations;
      trace_.rows.push_back({t, id, Series::kCwnd, cwnd});
      trace_.rows.push_back(
          {t, id, Series::kDelivery, static_cast<double>(delivered_bytes_[i])});
      if (f.ledbat) {
        if (auto base = f.ledbat->base_delay_us()) {
          trace_.rows.push_back({t, id, Series::kBaseDelay, static_cast<double>(*base)});
          trace_.rows.push_back({t, id, Series::kQueuingEst,
                                 static_cast<double>(f.ledbat->queuing_delay_us())});
        }
      }
    }
    trace_.rows.push_back(
        {t, kLinkEntity, Series::kQueue, static_cast<double>(link_.QueueLength())});
  }

  PropertyAudit BuildAudit() const {
    PropertyAudit a = audit_;
    for (const FlowState& f : flows_) {
      a.timeouts += f.sender->timeouts();
      if (f.ledbat) {
        a.linear_acks += f.ledbat->linear_acks();
        a.ramp_violations += f.ledbat->ramp_violations();
        a.minimum_violations += f.ledbat->minimum_violations();
      }
      const auto& history = f.gate().history();
      a.halvings += history.size();
      for (std::size_t i = 1; i < history.size(); ++i) {
        if (history[i].at - history[i - 1].at < history[i].rtt_est) ++a.halving_gap_violations;
      }
    }
    return a;
  }

  const Scenario& scenario_;
  std::vector<SimTime> starts_;
  SimTime end_;
  SimTime sample_every_;
  Engine engine_;
  Bottleneck link_;
  AckPath acks_;
  std::vector<FlowState> flows_;
  TraceSet trace_;
  PropertyAudit audit_;
  std::size_t delivered_scan_ = 0;
  std::vector<std::uint64_t> delivered_bytes_;
};

}  // namespace

void PropertyAudit::Merge(const PropertyAudit& o) {
  samples += o.samples;
  conservation_violations += o.conservation_violations;
  linear_acks += o.linear_acks;
  ramp_violations += o.ramp_violations;
  cwnd_floor_violations += o.cwnd_floor_violations;
  halvings += o.halvings;
  halving_gap_violations += o.halving_gap_violations;
  minimum_violations += o.minimum_violations;
  timeouts += o.timeouts;
}

RunResult RunScenario(const Scenario& s) {
  s.Validate();
  Simulation sim(s);
  return sim.Run();
}

void WriteSummaryCsv(const RunResult& r, std::ostream& out) {
  const MetricsReport& m = r.report;
  const bool slow_start = std::any_of(r.scenario.flows.begin(), r.scenario.flows.end(),
                                      [](const FlowSpec& f) { return f.slow_start(); });
  out << "scenario,C,B,dT,slow_start,eta_mean,eta_std,F_mean,F_std,L_mean,L_std\n";
  out << fmt::format("{},{},{},{},{},{},0,{},0,{},0\n", r.scenario.name,
                     static_cast<double>(r.scenario.capacity_bps) / 1e6, r.scenario.buffer_pkts,
                     m.interval.start.seconds(), slow_start ? "on" : "off", m.eta_percent,
                     m.fairness, m.loss_rate);
}

void WriteFlowsCsv(const RunResult& r, std::ostream& out) {
  out << "flow,kind,start_s,bytes_delivered,rate_bps,halvings,timeouts\n";
  const auto rates = FlowRates(r.trace, r.report.interval);
  for (std::size_t i = 0; i < r.trace.flows.size(); ++i) {
    const FlowId id = static_cast<FlowId>(i);
    std::size_t halvings = 0;
    std::size_t timeouts = 0;
    for (const TraceRow& row : r.trace.rows) {
      if (row.entity != id) continue;
      if (row.series == Series::kHalving) ++halvings;
      if (row.series == Series::kTimeout) ++timeouts;
    }
    const FlowRate& fr = rates[i];
    out << fmt::format("{},{},{},{},{},{},{}\n", id, FlowKindName(r.trace.flows[i].kind),
                       r.starts[i].seconds(), fr.bytes_delivered, fr.rate_bps, halvings,
                       timeouts);
  }
}

}  // namespace ledsim
