#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <ostream>
#include <thread>

#include <fmt/format.h>

#include "ledsim/harness.h"
#include "ledsim/rng.h"

namespace ledsim {

std::vector<StarvationEpisode> DetectStarvation(const TraceSet& trace,
                                                const StarvationOptions& opts) {
  const std::size_t n = trace.flows.size();
  if (n < 2) throw UsageError("starvation detection needs at least two flows");
  if (!(opts.bin_s > 0)) throw UsageError("bin width must be positive");

  const std::int64_t bin_us = std::llround(opts.bin_s * 1e6);
  const std::size_t bins = static_cast<std::size_t>(trace.duration.us() / bin_us);
  std::vector<std::vector<std::uint64_t>> bytes(n, std::vector<std::uint64_t>(bins, 0));
  for (const LinkRecord& r : trace.departed) {
    if (r.t_us <= 0) continue;
    const auto b = static_cast<std::size_t>((r.t_us - 1) / bin_us);
    if (b < bins) bytes[static_cast<std::size_t>(r.flow)][b] += r.bytes;
  }

  const double capacity = static_cast<double>(trace.capacity_bps);
  const double starved_below = opts.threshold * capacity / static_cast<double>(n);
  const double dominant_above = opts.dominant_fraction * capacity;
  auto rate = [&](std::size_t flow, std::size_t bin) {
    return static_cast<double>(bytes[flow][bin]) * 8.0 / opts.bin_s;
  };

  std::vector<StarvationEpisode> episodes;
  for (std::size_t f = 0; f < n; ++f) {
    constexpr std::size_t kNone = ~std::size_t{0};
    std::size_t run_start = kNone;
    auto close = [&](std::size_t end_bin) {
      if (run_start == kNone) return;
      const double start_s = static_cast<double>(run_start) * opts.bin_s;
      const double end_s = static_cast<double>(end_bin) * opts.bin_s;
      if (end_s - start_s >= opts.window_s) {
        episodes.push_back({static_cast<FlowId>(f), start_s, end_s});
      }
      run_start = kNone;
    };
    for (std::size_t b = 0; b < bins; ++b) {
      const bool active = trace.flows[f].start.us() <= static_cast<std::int64_t>(b) * bin_us;
      bool other_dominant = false;
      for (std::size_t g = 0; g < n; ++g) {
        if (g != f && rate(g, b) > dominant_above) other_dominant = true;
      }
      if (active && other_dominant && rate(f, b) < starved_below) {
        if (run_start == kNone) run_start = b;
      } else {
        close(b);
      }
    }
    close(bins);
  }
  return episodes;
}

std::string Table1Cell::PairName() const {
  return first == FlowKind::kTcp ? "tcp-ledbat" : "ledbat-ledbat";
}

std::string Table1Cell::DeltaTLabel() const {
  if (delta_t.mode == DeltaT::Mode::kUniform) {
    return fmt::format("U({},{})", delta_t.lo_s, delta_t.hi_s);
  }
  return fmt::format("{}", delta_t.fixed_s);
}

std::string Table1Cell::PresetName() const {
  const std::string dt =
      delta_t.mode == DeltaT::Mode::kUniform ? "u" : fmt::format("{}", delta_t.fixed_s);
  return fmt::format("table1-{}-c{}-b{}-dt{}-{}", PairName(), capacity_bps / 1'000'000,
                     buffer_pkts, dt, slow_start ? "ss" : "noss");
}

std::vector<Table1Cell> Table1Grid() {
  std::vector<Table1Cell> cells;
  const std::pair<std::int64_t, int> links[] = {{2'000'000, 10}, {10'000'000, 50}};
  DeltaT fixed2{DeltaT::Mode::kFixed, 2, 0, 10};
  DeltaT fixed10{DeltaT::Mode::kFixed, 10, 0, 10};
  DeltaT uniform{DeltaT::Mode::kUniform, 0, 0, 10};
  for (FlowKind first : {FlowKind::kTcp, FlowKind::kLedbat}) {
    for (const auto& [c, b] : links) {
      for (const DeltaT& dt : {fixed2, fixed10, uniform}) {
        for (bool ss : {false, true}) cells.push_back({first, c, b, dt, ss});
      }
    }
  }
  return cells;
}

Scenario Table1Scenario(const Table1Cell& cell) {
  Scenario s;
  s.name = cell.PresetName();
  s.capacity_bps = cell.capacity_bps;
  s.buffer_pkts = cell.buffer_pkts;
  s.delta_t = cell.delta_t;
  if (cell.delta_t.mode == DeltaT::Mode::kFixed) s.start_jitter_s = 0.1;
  FlowSpec first;
  first.kind = cell.first;
  FlowSpec second;
  second.kind = FlowKind::kLedbat;
  for (FlowSpec* f : {&first, &second}) {
    f->ledbat.slow_start = cell.slow_start;
    f->tcp.slow_start = cell.slow_start;
  }
  s.flows = {first, second};
  return s;
}

void ParallelFor(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(jobs, 1)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex error_mu;
  std::exception_ptr error;
  std::size_t error_index = n;
  std::vector<std::thread> threads;
  for (std::size_t w = 0; w < workers; ++w) {
    threads.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mu);
          if (i < error_index) {
            error_index = i;
            error = std::current_exception();
          }
        }
      }
    });
  }
  for (std::thread& t : threads) t.join();
  if (error) std::rethrow_exception(error);
}

std::vector<Table1Row> RunTable1(const Table1Options& opts) {
  if (opts.runs_per_cell < 1) throw UsageError("runs_per_cell must be at least 1");
  const std::vector<Table1Cell> grid = Table1Grid();
  std::vector<std::size_t> cell_ids;
  for (std::size_t c = 0; c < grid.size(); ++c) {
    if (!opts.filter || opts.filter(grid[c])) cell_ids.push_back(c);
  }

  const auto runs = static_cast<std::size_t>(opts.runs_per_cell);
  std::vector<MetricsReport> reports(cell_ids.size() * runs);
  std::vector<PropertyAudit> audits(reports.size());
  ParallelFor(reports.size(), opts.jobs, [&](std::size_t job) {
    const std::size_t cell = cell_ids[job / runs];
    const std::size_t run = job % runs;
    Scenario s = Table1Scenario(grid[cell]);
    s.seed = Rng::Split(opts.base_seed, cell * 100'000 + run).Next();
    if (opts.mutate) opts.mutate(s);
    RunResult r = RunScenario(s);
    reports[job] = r.report;
    audits[job] = r.audit;
  });

  std::vector<Table1Row> rows;
  for (std::size_t k = 0; k < cell_ids.size(); ++k) {
    Table1Row row;
    row.cell = grid[cell_ids[k]];
    row.runs.assign(reports.begin() + static_cast<std::ptrdiff_t>(k * runs),
                    reports.begin() + static_cast<std::ptrdiff_t>((k + 1) * runs));
    for (std::size_t r = 0; r < runs; ++r) row.audit.Merge(audits[k * runs + r]);
    row.aggregate = AggregateRuns(row.runs);
    rows.push_back(std::move(row));
  }
  return rows;
}

void WriteTable1Csv(const std::vector<Table1Row>& rows, std::ostream& out) {
  out << "scenario,C,B,dT,slow_start,eta_mean,eta_std,F_mean,F_std,L_mean,L_std\n";
  for (const Table1Row& row : rows) {
    const AggregateReport& a = row.aggregate;
    out << fmt::format("{},{},{},{},{},{},{},{},{},{},{}\n", row.cell.PairName(),
                       static_cast<double>(row.cell.capacity_bps) / 1e6, row.cell.buffer_pkts,
                       row.cell.DeltaTLabel(), row.cell.slow_start ? "on" : "off",
                       a.eta_percent.mean, a.eta_percent.stddev, a.fairness.mean,
                       a.fairness.stddev, a.loss_rate.mean, a.loss_rate.stddev);
  }
}

}  // namespace ledsim
