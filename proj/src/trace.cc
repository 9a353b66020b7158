#include "ledsim/trace.h"

#include <fmt/format.h>

#include <ostream>

namespace ledsim {

std::string_view FlowKindName(FlowKind kind) {
  return kind == FlowKind::kLedbat ? "ledbat" : "tcp";
}

std::string_view SeriesName(Series s) {
  switch (s) {
    case Series::kCwnd: return "cwnd_pkts";
    case Series::kQueue: return "queue_pkts";
    case Series::kDrop: return "drop";
    case Series::kDelivery: return "delivery";
    case Series::kBaseDelay: return "base_delay_us";
    case Series::kQueuingEst: return "queuing_est_us";
    case Series::kHalving: return "halving";
    case Series::kTimeout: return "timeout";
  }
  return "?";
}

std::vector<TraceRow> TraceSet::Select(FlowId entity, Series series) const {
  std::vector<TraceRow> out;
  for (const TraceRow& r : rows) {
    if (r.entity == entity && r.series == series) out.push_back(r);
  }
  return out;
}

void WriteTraceCsv(const TraceSet& trace, std::ostream& out) {
  fmt::memory_buffer buf;
  fmt::format_to(std::back_inserter(buf), "t_us,entity,series,value\n");
  for (const TraceRow& r : trace.rows) {
    if (r.entity == kLinkEntity) {
      fmt::format_to(std::back_inserter(buf), "{},link,{},{}\n", r.t_us, SeriesName(r.series),
                     r.value);
    } else {
      fmt::format_to(std::back_inserter(buf), "{},{},{},{}\n", r.t_us, r.entity,
                     SeriesName(r.series), r.value);
    }
  }
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

}  // namespace ledsim
