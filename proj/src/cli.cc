#include "ledsim/cli.h"

#include <cstdlib>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "ledsim/acceptance.h"
#include "ledsim/harness.h"

namespace ledsim::cli {

namespace {

using FileSet = std::vector<std::pair<std::string, std::string>>;

// Writes every file or none: existing targets are refused up front unless
// `force` is set.
void WriteFiles(const std::filesystem::path& dir, const FileSet& files, bool force) {
  if (!force) {
    for (const auto& [name, _] : files) {
      if (std::filesystem::exists(dir / name)) {
        throw UsageError(fmt::format("{} exists; pass --force to overwrite",
                                     (dir / name).string()));
      }
    }
  }
  std::filesystem::create_directories(dir);
  for (const auto& [name, content] : files) {
    std::ofstream out(dir / name, std::ios::binary | std::ios::trunc);
    if (!out) throw UsageError(fmt::format("cannot write {}", (dir / name).string()));
    out << content;
  }
}

std::filesystem::path ResolveOutDir(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv(kOutDirEnv); env && *env) return env;
  return "out";
}

Scenario ResolveScenario(const std::string& preset, const std::filesystem::path& file) {
  if (!preset.empty()) {
    auto s = Preset(preset);
    if (!s) throw UsageError(fmt::format("unknown preset '{}'", preset));
    return *s;
  }
  return LoadScenario(file);
}

FileSet RunFiles(const RunResult& r) {
  std::ostringstream trace, summary, flows;
  WriteTraceCsv(r.trace, trace);
  WriteSummaryCsv(r, summary);
  WriteFlowsCsv(r, flows);
  return {{"trace.csv", trace.str()}, {"summary.csv", summary.str()}, {"flows.csv", flows.str()}};
}

void PrintReport(std::ostream& out, const std::string& name, const MetricsReport& m) {
  out << fmt::format("{}: eta={:.2f}% F={:.4f} L={:.3e} over [{}, {}] s\n", name, m.eta_percent,
                     m.fairness, m.loss_rate, m.interval.start.seconds(),
                     m.interval.end.seconds());
}

std::string StarvationCsv(const std::vector<StarvationEpisode>& episodes) {
  std::string s = "flow,start_s,end_s\n";
  for (const StarvationEpisode& e : episodes) {
    s += fmt::format("{},{},{}\n", e.flow, e.start_s, e.end_s);
  }
  return s;
}

int Canned(const std::vector<std::string>& presets, std::uint64_t seed, int sample_ms,
           const std::filesystem::path& out_dir, bool force, bool starvation, std::ostream& out) {
  for (const std::string& name : presets) {
    Scenario s = *Preset(name);
    s.seed = seed;
    if (sample_ms > 0) s.sample_ms = sample_ms;
    const RunResult r = RunScenario(s);
    FileSet files = RunFiles(r);
    if (starvation) files.emplace_back("starvation.csv", StarvationCsv(DetectStarvation(r.trace)));
    WriteFiles(out_dir / name, files, force);
    PrintReport(out, name, Evaluate(r.trace, Interval{SimTime::Zero(), r.trace.duration}));
  }
  return kExitOk;
}

}  // namespace

int CmdRun(const RunRequest& req, std::ostream& out, std::ostream& err) {
  try {
    Scenario s = ResolveScenario(req.preset, req.scenario);
    if (req.seed) s.seed = *req.seed;
    if (req.sample_ms) s.sample_ms = *req.sample_ms;
    s.Validate();
    const RunResult r = RunScenario(s);
    WriteFiles(req.out_dir, RunFiles(r), req.force);
    PrintReport(out, s.name, r.report);
    return kExitOk;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
}

int Main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Packet-level simulator of LEDBAT competing with TCP on a drop-tail bottleneck",
               "ledsim"};
  app.require_subcommand(0, 1);

  std::string preset, scenario_path, out_flag;
  std::uint64_t seed = 1;
  int runs = 10, jobs = 1, sample_ms = 0;
  bool force = false, no_slow_start = false;
  double gain_scale = 1.0;

  auto add_out = [&](CLI::App* sub) {
    sub->add_option("--out", out_flag, fmt::format("Output directory (default ${} or ./out)",
                                                   kOutDirEnv));
    sub->add_flag("--force", force, "Overwrite existing output files");
  };

  CLI::App* run = app.add_subcommand("run", "Run one scenario file or preset");
  auto* preset_opt = run->add_option("--preset", preset, "Preset name (see --list)");
  run->add_option("--scenario", scenario_path, "Scenario file")->excludes(preset_opt);
  run->add_option("--seed", seed, "Scenario seed");
  run->add_option("--sample-ms", sample_ms, "Trace sampling period in ms")->check(CLI::PositiveNumber);
  bool list = false;
  run->add_flag("--list", list, "List preset names and exit");
  add_out(run);

  CLI::App* table1 = app.add_subcommand("table1", "Run the 24-cell competition grid");
  table1->add_option("--runs", runs, "Runs per cell")->check(CLI::PositiveNumber);
  table1->add_option("--seed", seed, "Base seed");
  table1->add_option("--jobs", jobs, "Parallel runs")->check(CLI::PositiveNumber);
  add_out(table1);

  CLI::App* fig2 = app.add_subcommand("fig2", "Run the fig2a and fig2b presets and the TCP-alone baseline");
  fig2->add_option("--seed", seed, "Scenario seed");
  fig2->add_option("--sample-ms", sample_ms, "Trace sampling period in ms")->check(CLI::PositiveNumber);
  add_out(fig2);

  CLI::App* fig3 = app.add_subcommand("fig3", "Run the three fig3 late-comer presets");
  fig3->add_option("--seed", seed, "Scenario seed");
  fig3->add_option("--sample-ms", sample_ms, "Trace sampling period in ms")->check(CLI::PositiveNumber);
  add_out(fig3);

  CLI::App* check = app.add_subcommand("check", "Run the acceptance suite");
  int check_runs = 20;
  std::uint64_t check_seed = 7;
  check->add_option("--runs", check_runs, "Runs per grid cell")->check(CLI::PositiveNumber);
  check->add_option("--seed", check_seed, "Base seed");
  check->add_option("--jobs", jobs, "Parallel runs")->check(CLI::PositiveNumber);
  check->add_option("--fault-gain-scale", gain_scale, "Fault injection: GAIN = scale/TARGET")
      ->check(CLI::PositiveNumber);
  check->add_flag("--fault-no-slow-start", no_slow_start,
                  "Fault injection: disable slow-start in every flow");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  }

  try {
    if (*run) {
      if (list) {
        for (const std::string& name : PresetNames()) out << name << "\n";
        return kExitOk;
      }
      if (preset.empty() && scenario_path.empty()) {
        err << run->help();
        return kExitUsage;
      }
      RunRequest req;
      req.preset = preset;
      req.scenario = scenario_path;
      if (run->count("--seed")) req.seed = seed;
      if (sample_ms > 0) req.sample_ms = sample_ms;
      req.out_dir = ResolveOutDir(out_flag);
      req.force = force;
      return CmdRun(req, out, err);
    }
    if (*table1) {
      Table1Options o;
      o.runs_per_cell = runs;
      o.base_seed = seed;
      o.jobs = jobs;
      const auto rows = RunTable1(o);
      std::ostringstream csv;
      WriteTable1Csv(rows, csv);
      WriteFiles(ResolveOutDir(out_flag), {{"table1.csv", csv.str()}}, force);
      out << csv.str();
      return kExitOk;
    }
    if (*fig2) {
      return Canned({"fig2a", "fig2b", "hs-b40-tcp-alone"}, seed, sample_ms,
                    ResolveOutDir(out_flag), force, false, out);
    }
    if (*fig3) {
      return Canned({"fig3-top", "fig3-mid", "fig3-bottom"}, seed, sample_ms,
                    ResolveOutDir(out_flag), force, true, out);
    }
    if (*check) {
      AcceptanceOptions o;
      o.runs = check_runs;
      o.seed = check_seed;
      o.jobs = jobs;
      o.gain_scale = gain_scale;
      o.force_no_slow_start = no_slow_start;
      int failed = 0;
      const auto results = RunAcceptance(o, [&](const CriterionResult& r) {
        out << FormatCriterion(r) << std::endl;
        if (!r.pass) ++failed;
      });
      out << fmt::format("{} of {} criteria passed\n", results.size() - failed, results.size());
      return failed == 0 ? kExitOk : kExitAcceptanceFailure;
    }
    err << app.help();
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
}

}  // namespace ledsim::cli
