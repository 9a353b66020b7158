#include "ledsim/acceptance.h"

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <fmt/format.h>

#include "ledsim/cli.h"
#include "ledsim/rng.h"

namespace ledsim {

namespace {

// Tolerances, one block per criterion.
constexpr double kPlateauWindowLo = 2.0, kPlateauWindowHi = 4.0;  // s
constexpr double kPlateauQueue = 20.8, kPlateauQueueTol = 2.0;    // pkts
constexpr double kFirstLossLo = 5.0, kFirstLossHi = 8.0;          // s
constexpr double kHalvedCwnd = 40.0, kHalvedCwndTol = 8.0;        // pkts
constexpr double kFig2aFairness = 0.65, kFig2aFairnessTol = 0.07;
constexpr double kWindowGain = 16.0, kWindowGainTol = 6.0;  // percent
constexpr double kFig2bFairnessMin = 0.99;
constexpr double kFig2bEtaTol = 2.0;  // percentage points
constexpr double kResyncLossLo = 20.0, kResyncLossHi = 30.0;  // s
constexpr double kResyncFairnessMin = 0.8;
constexpr double kResyncFrom = 30.0;  // s
constexpr double kStarveStartLo = 10.0, kStarveStartHi = 30.0;  // s
constexpr double kStarveEndSlack = 2.0;                         // s
constexpr double kLateNoSsFairness = 0.53, kLateNoSsFairnessTol = 0.08;
constexpr double kLateSsFairness = 0.99, kLateSsFairnessTol = 0.02;
constexpr double kAdslEtaMin = 96.0;
constexpr double kAdslFairness = 0.60, kAdslFairnessTol = 0.08;
constexpr double kSsLossMax = 5e-3;
constexpr int kJainVectors = 10'000;
constexpr double kJainRelTol = 1e-12;
constexpr double kOffsetRunSeconds = 60.0;

bool Within(double x, double target, double tol) { return std::abs(x - target) <= tol; }
bool InRange(double x, double lo, double hi) { return x >= lo && x <= hi; }

Interval Whole(const TraceSet& t) { return Interval{SimTime::Zero(), t.duration}; }
Interval From(const TraceSet& t, double start_s) {
  return Interval{SecondsToSimTime(start_s), t.duration};
}

std::string Fixed(double x, int digits = 3) { return fmt::format("{:.{}f}", x, digits); }

std::vector<TraceRow> RowsExcept(const TraceSet& t, Series skip) {
  std::vector<TraceRow> out;
  for (const TraceRow& r : t.rows) {
    if (r.series != skip) out.push_back(r);
  }
  return out;
}

bool SameRows(const std::vector<TraceRow>& a, const std::vector<TraceRow>& b) {
  return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin());
}

std::string ReadFile(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

class Suite {
 public:
  Suite(const AcceptanceOptions& opts, const std::function<void(const CriterionResult&)>& sink)
      : opts_(opts), sink_(sink), mutate_(FaultMutation(opts)) {}

  std::vector<CriterionResult> Run() {
    Fig2a();
    Fig2b();
    Fig3Mid();
    Fig3Bottom();
    Table1();
    Properties();
    Determinism();
    return results_;
  }

 private:
  RunResult Simulate(Scenario s) {
    mutate_(s);
    RunResult r = RunScenario(s);
    audit_.Merge(r.audit);
    return r;
  }

  RunResult SimulatePreset(std::string_view name) {
    Scenario s = *Preset(name);
    s.seed = opts_.seed;
    return Simulate(std::move(s));
  }

  void Report(std::string id, std::string title, bool pass, std::string measured,
              std::string expected) {
    CriterionResult r{std::move(id), std::move(title), pass, std::move(measured),
                      std::move(expected)};
    if (sink_) sink_(r);
    results_.push_back(std::move(r));
  }

  void Fig2a() {
    fig2a_ = SimulatePreset("fig2a");
    const TraceSet& t = fig2a_.trace;
    const FlowId tcp = 0, ledbat = 1;

    std::int64_t first_loss_us = std::numeric_limits<std::int64_t>::max();
    for (const LinkRecord& d : t.dropped) {
      if (d.flow == tcp) {
        first_loss_us = d.t_us;
        break;
      }
    }

    // (a) LEDBAT window peak before the first TCP loss and the queue there.
    double peak = -1;
    std::int64_t peak_t = -1;
    for (const TraceRow& r : t.Select(ledbat, Series::kCwnd)) {
      if (r.t_us >= first_loss_us) break;
      if (r.value > peak) {
        peak = r.value;
        peak_t = r.t_us;
      }
    }
    double queue_at_peak = -1;
    for (const TraceRow& r : t.Select(kLinkEntity, Series::kQueue)) {
      if (r.t_us == peak_t) queue_at_peak = r.value;
    }
    const double peak_s = static_cast<double>(peak_t) / 1e6;
    Report("1a", "fig2a LEDBAT plateau at the delay target",
           InRange(peak_s, kPlateauWindowLo, kPlateauWindowHi) &&
               Within(queue_at_peak, kPlateauQueue, kPlateauQueueTol),
           fmt::format("cwnd peak {} pkts at t={} s, queue {} pkts", Fixed(peak, 2),
                       Fixed(peak_s, 2), queue_at_peak),
           fmt::format("t in [{}, {}] s, queue {} +/- {} pkts", kPlateauWindowLo,
                       kPlateauWindowHi, kPlateauQueue, kPlateauQueueTol));

    // (b) First TCP loss and the window right after the cut.
    const auto halvings = t.Select(tcp, Series::kHalving);
    const double loss_s = static_cast<double>(first_loss_us) / 1e6;
    const double halved = halvings.empty() ? -1 : halvings.front().value;
    Report("1b", "fig2a first TCP loss and halving",
           InRange(loss_s, kFirstLossLo, kFirstLossHi) &&
               Within(halved, kHalvedCwnd, kHalvedCwndTol),
           fmt::format("first loss t={} s, cwnd after halving {} pkts", Fixed(loss_s, 2),
                       Fixed(halved, 2)),
           fmt::format("t in [{}, {}] s, cwnd {} +/- {} pkts", kFirstLossLo, kFirstLossHi,
                       kHalvedCwnd, kHalvedCwndTol));

    // (c) Fairness over the whole run.
    const MetricsReport whole = Evaluate(t, Whole(t));
    const auto rates = FlowRates(t, Whole(t));
    Report("1c", "fig2a fairness over [0,300] s",
           Within(whole.fairness, kFig2aFairness, kFig2aFairnessTol),
           fmt::format("F={} (TCP/LEDBAT data ratio {})", Fixed(whole.fairness),
                       Fixed(rates[1].rate_bps > 0 ? rates[0].rate_bps / rates[1].rate_bps : 0, 1)),
           fmt::format("F = {} +/- {}", kFig2aFairness, kFig2aFairnessTol));

    // (d) Summed windows against TCP alone.
    const RunResult alone = SimulatePreset("hs-b40-tcp-alone");
    const double both = MeanWindowSum(t, Whole(t));
    const double single = MeanWindowSum(alone.trace, Whole(alone.trace));
    const double gain = 100.0 * (both / single - 1.0);
    const double eta_alone = Evaluate(alone.trace, Whole(alone.trace)).eta_percent;
    Report("1d", "fig2a utilization gain over TCP alone",
           Within(gain, kWindowGain, kWindowGainTol),
           fmt::format("mean window sum {} vs {} pkts: {:+.1f}% (throughput eta {} vs {})",
                       Fixed(both, 2), Fixed(single, 2), gain, Fixed(whole.eta_percent, 2),
                       Fixed(eta_alone, 2)),
           fmt::format("{} +/- {}%", kWindowGain, kWindowGainTol));
  }

  void Fig2b() {
    const RunResult r = SimulatePreset("fig2b");
    const MetricsReport m = Evaluate(r.trace, Whole(r.trace));
    const double eta_a = Evaluate(fig2a_.trace, Whole(fig2a_.trace)).eta_percent;
    Report("2", "fig2b two LEDBAT flows share fairly",
           m.fairness > kFig2bFairnessMin && std::abs(m.eta_percent - eta_a) <= kFig2bEtaTol,
           fmt::format("F={}, eta={} (fig2a eta={})", Fixed(m.fairness, 4),
                       Fixed(m.eta_percent, 2), Fixed(eta_a, 2)),
           fmt::format("F > {}, |eta - fig2a eta| <= {}", kFig2bFairnessMin, kFig2bEtaTol));
  }

  void Fig3Mid() {
    const RunResult r = SimulatePreset("fig3-mid");
    const TraceSet& t = r.trace;
    int losses = 0;
    for (const LinkRecord& d : t.dropped) {
      const double s = static_cast<double>(d.t_us) / 1e6;
      if (InRange(s, kResyncLossLo, kResyncLossHi)) ++losses;
    }
    const MetricsReport after = Evaluate(t, From(t, kResyncFrom));
    Report("3", "fig3-mid loss resynchronizes the flows",
           losses > 0 && after.fairness > kResyncFairnessMin,
           fmt::format("{} drops in [{}, {}] s, F over [{}, 300] s = {}", losses, kResyncLossLo,
                       kResyncLossHi, kResyncFrom, Fixed(after.fairness)),
           fmt::format(">= 1 drop in [{}, {}] s, F > {}", kResyncLossLo, kResyncLossHi,
                       kResyncFairnessMin));
  }

  void Fig3Bottom() {
    Scenario s = *Preset("fig3-bottom");
    s.seed = opts_.seed;
    const RunResult r = Simulate(s);
    const TraceSet& t = r.trace;
    const double rollover_s = 60.0 * r.scenario.flows[0].ledbat.base_histo_minutes;
    const double horizon_s = std::min(rollover_s, t.duration.seconds());
    int early_drops = 0;
    for (const LinkRecord& d : t.dropped) {
      if (static_cast<double>(d.t_us) / 1e6 < horizon_s) ++early_drops;
    }
    const auto episodes = DetectStarvation(t);
    const StarvationEpisode* match = nullptr;
    for (const StarvationEpisode& e : episodes) {
      if (e.flow == 0 && InRange(e.start_s, kStarveStartLo, kStarveStartHi) &&
          e.end_s >= horizon_s - kStarveEndSlack) {
        match = &e;
      }
    }
    std::string found = "none";
    if (!episodes.empty()) {
      found.clear();
      for (const StarvationEpisode& e : episodes) {
        found += fmt::format("{}flow {} [{}, {}] s", found.empty() ? "" : "; ", e.flow,
                             e.start_s, e.end_s);
      }
    }
    Report("4", "fig3-bottom late-comer starves the first flow",
           early_drops == 0 && match != nullptr,
           fmt::format("{} drops before {} s; episodes: {}", early_drops, horizon_s, found),
           fmt::format("0 drops; flow 0 episode starting in [{}, {}] s and lasting to >= {} s",
                       kStarveStartLo, kStarveStartHi, horizon_s - kStarveEndSlack));
  }

  void Table1() {
    auto spot = [](const Table1Cell& c, FlowKind first, std::int64_t cap, double dt, bool ss) {
      return c.first == first && c.capacity_bps == cap &&
             c.delta_t.mode == DeltaT::Mode::kFixed && c.delta_t.fixed_s == dt &&
             c.slow_start == ss;
    };
    Table1Options o;
    o.runs_per_cell = opts_.runs;
    o.base_seed = opts_.seed;
    o.jobs = opts_.jobs;
    o.mutate = mutate_;
    o.filter = [&](const Table1Cell& c) {
      return c.slow_start || spot(c, FlowKind::kLedbat, 10'000'000, 10, false) ||
             spot(c, FlowKind::kTcp, 2'000'000, 2, false);
    };
    const auto rows = RunTable1(o);
    const Table1Row* ll_noss = nullptr;
    const Table1Row* ll_ss = nullptr;
    const Table1Row* adsl = nullptr;
    const Table1Row* worst_ss = nullptr;
    for (const Table1Row& row : rows) {
      audit_.Merge(row.audit);
      if (spot(row.cell, FlowKind::kLedbat, 10'000'000, 10, false)) ll_noss = &row;
      if (spot(row.cell, FlowKind::kLedbat, 10'000'000, 10, true)) ll_ss = &row;
      if (spot(row.cell, FlowKind::kTcp, 2'000'000, 2, false)) adsl = &row;
      if (row.cell.slow_start &&
          (!worst_ss || row.aggregate.loss_rate.mean > worst_ss->aggregate.loss_rate.mean)) {
        worst_ss = &row;
      }
    }
    const std::string runs = fmt::format("{} runs", opts_.runs);
    const double f0 = ll_noss->aggregate.fairness.mean;
    Report("5a", "table1 LEDBAT-LEDBAT C=10 B=50 dT=10 without slow-start",
           opts_.runs >= 20 && Within(f0, kLateNoSsFairness, kLateNoSsFairnessTol),
           fmt::format("F={} (sd {}, {})", Fixed(f0), Fixed(ll_noss->aggregate.fairness.stddev),
                       runs),
           fmt::format("F = {} +/- {}, >= 20 runs", kLateNoSsFairness, kLateNoSsFairnessTol));
    const double f1 = ll_ss->aggregate.fairness.mean;
    Report("5b", "table1 LEDBAT-LEDBAT C=10 B=50 dT=10 with slow-start",
           opts_.runs >= 20 && Within(f1, kLateSsFairness, kLateSsFairnessTol),
           fmt::format("F={} (sd {}, {})", Fixed(f1), Fixed(ll_ss->aggregate.fairness.stddev),
                       runs),
           fmt::format("F = {} +/- {}, >= 20 runs", kLateSsFairness, kLateSsFairnessTol));
    const double eta = adsl->aggregate.eta_percent.mean;
    const double f2 = adsl->aggregate.fairness.mean;
    Report("5c", "table1 TCP-LEDBAT C=2 B=10 dT=2 without slow-start",
           opts_.runs >= 20 && eta >= kAdslEtaMin &&
               Within(f2, kAdslFairness, kAdslFairnessTol),
           fmt::format("eta={}, F={} ({})", Fixed(eta, 2), Fixed(f2), runs),
           fmt::format("eta >= {}, F = {} +/- {}, >= 20 runs", kAdslEtaMin, kAdslFairness,
                       kAdslFairnessTol));
    std::string ledbat_only;
    double ll_worst = 0;
    for (const Table1Row& row : rows) {
      if (row.cell.slow_start && row.cell.first == FlowKind::kLedbat) {
        ll_worst = std::max(ll_worst, row.aggregate.loss_rate.mean);
      }
    }
    const double worst = worst_ss->aggregate.loss_rate.mean;
    Report("5d", "table1 loss rate with slow-start, every cell",
           worst <= kSsLossMax,
           fmt::format("worst L={:.2e} in {} (LEDBAT-LEDBAT cells worst L={:.2e})", worst,
                       worst_ss->cell.PresetName(), ll_worst),
           fmt::format("L <= {:.0e} in all 12 with-slow-start cells", kSsLossMax));
  }

  void Properties() {
    Report("6a", "per-ack LEDBAT increment never exceeds 1/cwnd",
           audit_.ramp_violations == 0 && audit_.linear_acks > 0,
           fmt::format("{} violations in {} linear-controller acks", audit_.ramp_violations,
                       audit_.linear_acks),
           "0 violations");
    ClockOffsets();
    PinnedEstimator();
    Report("6d", "packet conservation at every sample",
           audit_.conservation_violations == 0 && audit_.samples > 0,
           fmt::format("{} violations in {} samples", audit_.conservation_violations,
                       audit_.samples),
           "0 violations");
    Jain();
    Report("6f", "cwnd >= 1 at every sample", audit_.cwnd_floor_violations == 0,
           fmt::format("{} violations in {} samples", audit_.cwnd_floor_violations,
                       audit_.samples),
           "0 violations");
    Report("6g", "inter-halving time >= rtt_est",
           audit_.halving_gap_violations == 0 && audit_.halvings > 0,
           fmt::format("{} violations in {} halvings", audit_.halving_gap_violations,
                       audit_.halvings),
           "0 violations");
  }

  void ClockOffsets() {
    Scenario base = *Preset("fig2a");
    base.duration_s = kOffsetRunSeconds;
    const auto reference = RowsExcept(Simulate(base).trace, Series::kBaseDelay);
    int compared = 0;
    std::vector<std::string> mismatches;
    for (std::int64_t offset : {std::int64_t{1'000'000}, std::int64_t{-1'000'000},
                                std::int64_t{3'600'000'000}, std::int64_t{-3'600'000'000}}) {
      for (bool sender_side : {true, false}) {
        Scenario s = base;
        for (FlowSpec& f : s.flows) {
          if (sender_side) {
            f.ledbat.clock_offset_us = offset;
            f.tcp.clock_offset_us = offset;
          } else {
            f.receiver_clock_offset_us = offset;
          }
        }
        ++compared;
        if (!SameRows(reference, RowsExcept(Simulate(s).trace, Series::kBaseDelay))) {
          mismatches.push_back(
              fmt::format("{}{}us", sender_side ? "sender" : "receiver", offset));
        }
      }
    }
    Report("6b", "trace invariant under sender/receiver clock offsets", mismatches.empty(),
           mismatches.empty()
               ? fmt::format("{} offset runs identical to the reference", compared)
               : fmt::format("differs for {}", fmt::join(mismatches, ", ")),
           "identical cwnd, queuing estimate, queue and loss rows for +/-1 s and +/-1 h");
  }

  void PinnedEstimator() {
    Scenario tcp = *Preset("hs-b40-tcp-alone");
    Scenario led = tcp;
    led.flows[0].kind = FlowKind::kLedbat;
    led.flows[0].ledbat.pin_queuing_delay_zero = true;
    led.flows[0].ledbat.pacing = false;
    const RunResult a = Simulate(led);
    const RunResult b = Simulate(tcp);
    const auto ca = a.trace.Select(0, Series::kCwnd);
    const auto cb = b.trace.Select(0, Series::kCwnd);
    const bool same_cwnd = SameRows(ca, cb);
    const bool same_losses = SameRows(a.trace.Select(0, Series::kHalving),
                                      b.trace.Select(0, Series::kHalving)) &&
                             SameRows(a.trace.Select(kLinkEntity, Series::kDrop),
                                      b.trace.Select(kLinkEntity, Series::kDrop));
    std::size_t first_diff = 0;
    while (first_diff < std::min(ca.size(), cb.size()) && ca[first_diff] == cb[first_diff]) {
      ++first_diff;
    }
    Report("6c", "zero-delay LEDBAT equals TCP congestion avoidance bit-exactly",
           same_cwnd && same_losses && a.audit.halvings > 0,
           same_cwnd && same_losses
               ? fmt::format("{} cwnd samples and {} halvings identical", ca.size(),
                             a.audit.halvings)
               : fmt::format("first cwnd difference at sample {}", first_diff),
           "identical cwnd, halving and drop rows");
  }

  void Jain() {
    Rng rng = Rng::Split(opts_.seed, 0x4a41494e);
    int bound_failures = 0;
    int scale_failures = 0;
    for (int i = 0; i < kJainVectors; ++i) {
      const std::size_t n = 1 + static_cast<std::size_t>(rng.Next() % 16);
      std::vector<double> x(n);
      for (double& v : x) {
        // Mix of zeros and values spread over six decades.
        v = rng.Uniform01() < 0.1 ? 0.0 : std::pow(10.0, rng.Uniform(-3, 3));
      }
      if (std::all_of(x.begin(), x.end(), [](double v) { return v == 0; })) x[0] = 1.0;
      const double f = JainFairness(x);
      const double lo = 1.0 / static_cast<double>(n);
      if (f < lo * (1 - kJainRelTol) || f > 1 + kJainRelTol) ++bound_failures;
      const double k = std::pow(10.0, rng.Uniform(-6, 6));
      std::vector<double> scaled = x;
      for (double& v : scaled) v *= k;
      if (std::abs(JainFairness(scaled) - f) > kJainRelTol * f) ++scale_failures;
    }
    Report("6e", "Jain index bounds and scale invariance", bound_failures + scale_failures == 0,
           fmt::format("{} bound and {} scale failures over {} vectors", bound_failures,
                       scale_failures, kJainVectors),
           fmt::format("1/N <= F <= 1 and F(kx) = F(x) to {:.0e} relative", kJainRelTol));
  }

  void Determinism() {
    std::filesystem::path root = opts_.scratch_dir;
    const bool own_root = root.empty();
    if (own_root) {
      root = std::filesystem::temp_directory_path() /
             fmt::format("ledsim-check-{}-{}", ::getpid(), opts_.seed);
    }
    std::ostringstream sink;
    std::vector<std::string> diffs;
    int rc = 0;
    for (const char* sub : {"a", "b"}) {
      cli::RunRequest req;
      req.preset = "fig2a";
      req.seed = opts_.seed;
      req.out_dir = root / sub;
      req.force = true;
      rc |= cli::CmdRun(req, sink, sink);
    }
    for (const char* file : {"trace.csv", "summary.csv", "flows.csv"}) {
      const std::string a = ReadFile(root / "a" / file);
      const std::string b = ReadFile(root / "b" / file);
      if (a.empty() || a != b) diffs.push_back(file);
    }
    if (own_root) {
      std::error_code ec;
      std::filesystem::remove_all(root, ec);
    }
    Report("7", "repeated run produces byte-identical files", rc == 0 && diffs.empty(),
           rc != 0 ? fmt::format("run failed: {}", sink.str())
           : diffs.empty() ? "trace.csv, summary.csv, flows.csv identical"
                           : fmt::format("differs: {}", fmt::join(diffs, ", ")),
           "identical bytes");
  }

  const AcceptanceOptions& opts_;
  const std::function<void(const CriterionResult&)>& sink_;
  std::function<void(Scenario&)> mutate_;
  std::vector<CriterionResult> results_;
  PropertyAudit audit_;
  RunResult fig2a_;
};

}  // namespace

std::string FormatCriterion(const CriterionResult& r) {
  return fmt::format("{} {:<3} {} | measured: {} | expected: {}", r.pass ? "PASS" : "FAIL",
                     r.id, r.title, r.measured, r.expected);
}

std::function<void(Scenario&)> FaultMutation(const AcceptanceOptions& opts) {
  const double scale = opts.gain_scale;
  const bool no_ss = opts.force_no_slow_start;
  return [scale, no_ss](Scenario& s) {
    for (FlowSpec& f : s.flows) {
      if (scale != 1.0 && f.kind == FlowKind::kLedbat) {
        constexpr std::int64_t kDen = 1000;
        f.ledbat.explicit_gain = Gain{std::llround(scale * kDen), f.ledbat.target_us * kDen};
      }
      if (no_ss) {
        f.ledbat.slow_start = false;
        f.tcp.slow_start = false;
      }
    }
  };
}

std::vector<CriterionResult> RunAcceptance(
    const AcceptanceOptions& opts, const std::function<void(const CriterionResult&)>& on_result) {
  return Suite(opts, on_result).Run();
}

}  // namespace ledsim
