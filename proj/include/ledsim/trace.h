#ifndef LEDSIM_TRACE_H_
#define LEDSIM_TRACE_H_

#include <cstdint>
#include <iosfwd>
#include <string_view>
#include <vector>

#include "ledsim/packet.h"
#include "ledsim/sim_time.h"

namespace ledsim {

enum class FlowKind { kLedbat, kTcp };
std::string_view FlowKindName(FlowKind kind);

enum class Series : std::uint8_t {
  kCwnd,        // cwnd_pkts, sampled
  kQueue,       // queue_pkts (link), sampled; excludes the packet in service
  kDrop,        // drop (event), value = dropped seq
  kDelivery,    // delivery, sampled cumulative bytes through the bottleneck
  kBaseDelay,   // base_delay_us (ledbat), sampled
  kQueuingEst,  // queuing_est_us (ledbat), sampled
  kHalving,     // halving (event), value = cwnd after the cut
  kTimeout,     // timeout (event), value = cwnd after the safety timeout
};
std::string_view SeriesName(Series s);

inline constexpr FlowId kLinkEntity = -1;

struct TraceRow {
  std::int64_t t_us = 0;
  FlowId entity = kLinkEntity;
  Series series = Series::kCwnd;
  double value = 0;
  bool operator==(const TraceRow&) const = default;
};

struct TraceFlow {
  FlowKind kind = FlowKind::kLedbat;
  SimTime start;
};

// One data packet seen at the bottleneck.
struct LinkRecord {
  std::int64_t t_us = 0;
  FlowId flow = 0;
  std::uint32_t bytes = 0;
  bool retransmission = false;
};

// Everything a run leaves behind: the sampled/event rows that go to the trace
// CSV, plus the per-packet link log the metrics are computed from.
struct TraceSet {
  std::int64_t capacity_bps = 0;
  SimTime duration;
  std::vector<TraceFlow> flows;
  std::vector<TraceRow> rows;
  std::vector<LinkRecord> accepted;
  std::vector<LinkRecord> dropped;
  std::vector<LinkRecord> departed;  // transmission completed

  // Rows of one series for one entity, in time order.
  std::vector<TraceRow> Select(FlowId entity, Series series) const;
};

// `t_us,entity,series,value` with a header line and a trailing newline.
void WriteTraceCsv(const TraceSet& trace, std::ostream& out);

}  // namespace ledsim

#endif  // LEDSIM_TRACE_H_
