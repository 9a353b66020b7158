#ifndef LEDSIM_HARNESS_H_
#define LEDSIM_HARNESS_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ledsim/engine.h"
#include "ledsim/ledbat.h"
#include "ledsim/metrics.h"
#include "ledsim/tcp.h"
#include "ledsim/trace.h"

namespace ledsim {

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& source, int line, const std::string& message);
  int line() const { return line_; }

 private:
  int line_;
};

class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct FlowSpec {
  FlowKind kind = FlowKind::kLedbat;
  double start_s = 0;
  LedbatConfig ledbat;
  TcpConfig tcp;
  std::int64_t receiver_clock_offset_us = 0;

  std::int64_t sender_clock_offset_us() const {
    return kind == FlowKind::kLedbat ? ledbat.clock_offset_us : tcp.clock_offset_us;
  }
  bool slow_start() const { return kind == FlowKind::kLedbat ? ledbat.slow_start : tcp.slow_start; }
};

// Start time of the second flow. kFlowStart keeps flows[1].start_s.
struct DeltaT {
  enum class Mode { kFlowStart, kFixed, kUniform };
  Mode mode = Mode::kFlowStart;
  double fixed_s = 0;
  double lo_s = 0;
  double hi_s = 10;
};

struct Scenario {
  std::string name = "custom";
  std::int64_t capacity_bps = 10'000'000;
  int buffer_pkts = 40;
  std::int64_t rtt_base_us = 50'000;
  std::uint32_t packet_bytes = 1500;
  double duration_s = 300;
  std::uint64_t seed = 1;
  int sample_ms = 10;
  DeltaT delta_t;
  // Upper bound of the U(0, jitter) shift applied to the second flow.
  double start_jitter_s = 0;
  std::vector<FlowSpec> flows;

  std::int64_t BdpBytes() const { return capacity_bps * rtt_base_us / 8 / 1'000'000; }
  double BdpPackets() const {
    return static_cast<double>(capacity_bps) * static_cast<double>(rtt_base_us) /
           (8e6 * packet_bytes);
  }

  // Throws ValidationError.
  void Validate() const;
};

// Presets: fig2a (alias hs-b40-tcp-vs-ledbat), fig2b, hs-b40-tcp-alone,
// hs-b40-tcp-vs-tcp, hs-b40-ledbat-alone, fig3-top, fig3-mid, fig3-bottom,
// adsl-down-tcp-vs-ledbat, adsl-up-tcp-vs-ledbat, and one
// table1-<pair>-c<C>-b<B>-dt<2|10|u>-<noss|ss> per table1 grid cell.
std::optional<Scenario> Preset(std::string_view name);
std::vector<std::string> PresetNames();

// Versioned key-value scenario format; see docs/scenario-format.md.
Scenario ParseScenario(std::string_view text, const std::string& source = "<string>");
Scenario LoadScenario(const std::filesystem::path& path);
std::string FormatScenario(const Scenario& s);

// Flow start times after applying delta_t and jitter from the scenario seed.
std::vector<SimTime> ResolveStarts(const Scenario& s);

// Runtime checks of the controller and link invariants.
struct PropertyAudit {
  std::uint64_t samples = 0;
  std::uint64_t conservation_violations = 0;
  std::uint64_t linear_acks = 0;
  std::uint64_t ramp_violations = 0;
  std::uint64_t cwnd_floor_violations = 0;
  std::uint64_t halvings = 0;
  std::uint64_t halving_gap_violations = 0;
  std::uint64_t minimum_violations = 0;
  std::uint64_t timeouts = 0;

  void Merge(const PropertyAudit& o);
};

struct RunResult {
  Scenario scenario;
  std::vector<SimTime> starts;
  TraceSet trace;
  MetricsReport report;  // over [last flow start, duration]
  RunSummary summary;
  PropertyAudit audit;
};

RunResult RunScenario(const Scenario& s);

void WriteSummaryCsv(const RunResult& r, std::ostream& out);
void WriteFlowsCsv(const RunResult& r, std::ostream& out);

struct StarvationOptions {
  double window_s = 10;
  double threshold = 0.05;          // fraction of the fair share
  double dominant_fraction = 0.5;   // fraction of capacity the other flow exceeds
  double bin_s = 1.0;
};

struct StarvationEpisode {
  FlowId flow = 0;
  double start_s = 0;
  double end_s = 0;
};

// Throws UsageError on a trace with fewer than two flows.
std::vector<StarvationEpisode> DetectStarvation(const TraceSet& trace,
                                                const StarvationOptions& opts = {});

struct Table1Cell {
  FlowKind first = FlowKind::kTcp;  // second flow is always LEDBAT
  std::int64_t capacity_bps = 0;
  int buffer_pkts = 0;
  DeltaT delta_t;
  bool slow_start = false;

  std::string PairName() const;
  std::string DeltaTLabel() const;
  std::string PresetName() const;
};

// The 24 cells in table order.
std::vector<Table1Cell> Table1Grid();
Scenario Table1Scenario(const Table1Cell& cell);

struct Table1Options {
  int runs_per_cell = 10;
  std::uint64_t base_seed = 1;
  int jobs = 1;
  std::function<bool(const Table1Cell&)> filter;  // empty: every cell
  // Applied to every scenario before it runs (fault injection).
  std::function<void(Scenario&)> mutate;
};

struct Table1Row {
  Table1Cell cell;
  AggregateReport aggregate;
  std::vector<MetricsReport> runs;
  PropertyAudit audit;
};

std::vector<Table1Row> RunTable1(const Table1Options& opts);
void WriteTable1Csv(const std::vector<Table1Row>& rows, std::ostream& out);

// Runs fn(i) for i in [0, n) on up to `jobs` threads.
void ParallelFor(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn);

}  // namespace ledsim

#endif  // LEDSIM_HARNESS_H_
