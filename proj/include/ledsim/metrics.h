#ifndef LEDSIM_METRICS_H_
#define LEDSIM_METRICS_H_

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "ledsim/sim_time.h"
#include "ledsim/trace.h"

namespace ledsim {

class AllZeroRates : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct Interval {
  SimTime start;
  SimTime end;
  SimTime length() const { return end - start; }
};

struct FlowRate {
  FlowId flow = 0;
  std::uint64_t bytes_delivered = 0;
  double rate_bps = 0;
};

struct MetricsReport {
  double eta_percent = 0;
  double fairness = 0;
  double loss_rate = 0;
  Interval interval;
};

// Jain's index (sum x)^2 / (N * sum x^2). Throws AllZeroRates when every rate
// is zero and std::invalid_argument on an empty or negative input.
double JainFairness(std::span<const double> rates);

// Per-flow delivered bytes over the interval, counting packets whose
// transmission at the bottleneck completed in (start, end].
std::vector<FlowRate> FlowRates(const TraceSet& trace, Interval interval);

// Bits fully transmitted in the interval over capacity * length, in percent.
// Retransmissions count: they occupy the link.
double Utilization(const TraceSet& trace, std::int64_t capacity_bps, Interval interval);

// dropped / offered for packets arriving at the bottleneck in [start, end).
// Zero when nothing was offered.
double LossRate(const TraceSet& trace, Interval interval);

// Time average over the cwnd samples in [start, end] of the summed windows of
// all flows (a flow that has not started contributes 0).
double MeanWindowSum(const TraceSet& trace, Interval interval);

MetricsReport Evaluate(const TraceSet& trace, Interval interval);

struct Stat {
  double mean = 0;
  double stddev = 0;  // sample (n - 1) standard deviation, 0 for n = 1
};

struct AggregateReport {
  Stat eta_percent;
  Stat fairness;
  Stat loss_rate;
  std::size_t runs = 0;
};

// Throws std::invalid_argument on an empty input.
Stat MeanAndStddev(std::span<const double> values);
AggregateReport AggregateRuns(std::span<const MetricsReport> reports);

}  // namespace ledsim

#endif  // LEDSIM_METRICS_H_
