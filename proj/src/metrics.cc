#include "ledsim/metrics.h"

#include <cmath>
#include <map>

namespace ledsim {

double JainFairness(std::span<const double> rates) {
  if (rates.empty()) throw std::invalid_argument("fairness of an empty rate set");
  double sum = 0;
  double sum_sq = 0;
  for (double x : rates) {
    if (x < 0 || std::isnan(x)) throw std::invalid_argument("rates must be non-negative");
    sum += x;
    sum_sq += x * x;
  }
  if (sum_sq == 0) throw AllZeroRates("fairness undefined: every rate is zero");
  return (sum * sum) / (static_cast<double>(rates.size()) * sum_sq);
}

std::vector<FlowRate> FlowRates(const TraceSet& trace, Interval interval) {
  std::vector<FlowRate> rates(trace.flows.size());
  for (std::size_t i = 0; i < rates.size(); ++i) rates[i].flow = static_cast<FlowId>(i);
  for (const LinkRecord& r : trace.departed) {
    if (r.t_us > interval.start.us() && r.t_us <= interval.end.us()) {
      rates[static_cast<std::size_t>(r.flow)].bytes_delivered += r.bytes;
    }
  }
  const double seconds = interval.length().seconds();
  for (FlowRate& fr : rates) {
    fr.rate_bps = seconds > 0 ? static_cast<double>(fr.bytes_delivered) * 8.0 / seconds : 0.0;
  }
  return rates;
}

double Utilization(const TraceSet& trace, std::int64_t capacity_bps, Interval interval) {
  if (interval.length() <= SimTime::Zero()) return 0.0;
  std::uint64_t bytes = 0;
  for (const LinkRecord& r : trace.departed) {
    if (r.t_us > interval.start.us() && r.t_us <= interval.end.us()) bytes += r.bytes;
  }
  const double capacity_bits =
      static_cast<double>(capacity_bps) * interval.length().seconds();
  return 100.0 * static_cast<double>(bytes) * 8.0 / capacity_bits;
}

namespace {

std::uint64_t CountIn(const std::vector<LinkRecord>& records, Interval interval) {
  std::uint64_t n = 0;
  for (const LinkRecord& r : records) {
    if (r.t_us >= interval.start.us() && r.t_us < interval.end.us()) ++n;
  }
  return n;
}

}  // namespace

double LossRate(const TraceSet& trace, Interval interval) {
  const std::uint64_t dropped = CountIn(trace.dropped, interval);
  const std::uint64_t offered = dropped + CountIn(trace.accepted, interval);
  if (offered == 0) return 0.0;
  return static_cast<double>(dropped) / static_cast<double>(offered);
}

double MeanWindowSum(const TraceSet& trace, Interval interval) {
  std::map<std::int64_t, double> per_sample;
  for (const TraceRow& r : trace.rows) {
    if (r.series != Series::kCwnd) continue;
    if (r.t_us < interval.start.us() || r.t_us > interval.end.us()) continue;
    per_sample[r.t_us] += r.value;
  }
  if (per_sample.empty()) return 0.0;
  double total = 0;
  for (const auto& [t, sum] : per_sample) total += sum;
  return total / static_cast<double>(per_sample.size());
}

MetricsReport Evaluate(const TraceSet& trace, Interval interval) {
  MetricsReport report;
  report.interval = interval;
  report.eta_percent = Utilization(trace, trace.capacity_bps, interval);
  report.loss_rate = LossRate(trace, interval);
  std::vector<double> rates;
  for (const FlowRate& fr : FlowRates(trace, interval)) rates.push_back(fr.rate_bps);
  try {
    report.fairness = JainFairness(rates);
  } catch (const AllZeroRates&) {
    report.fairness = 0.0;
  }
  return report;
}

Stat MeanAndStddev(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("no values to aggregate");
  const double n = static_cast<double>(values.size());
  double sum = 0;
  for (double v : values) sum += v;
  Stat s;
  s.mean = sum / n;
  if (values.size() > 1) {
    double ss = 0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.stddev = std::sqrt(ss / (n - 1));
  }
  return s;
}

AggregateReport AggregateRuns(std::span<const MetricsReport> reports) {
  if (reports.empty()) throw std::invalid_argument("no reports to aggregate");
  std::vector<double> eta;
  std::vector<double> fairness;
  std::vector<double> loss;
  for (const MetricsReport& r : reports) {
    eta.push_back(r.eta_percent);
    fairness.push_back(r.fairness);
    loss.push_back(r.loss_rate);
  }
  AggregateReport agg;
  agg.eta_percent = MeanAndStddev(eta);
  agg.fairness = MeanAndStddev(fairness);
  agg.loss_rate = MeanAndStddev(loss);
  agg.runs = reports.size();
  return agg;
}

}  // namespace ledsim
