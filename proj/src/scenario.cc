#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "ledsim/harness.h"
#include "ledsim/network.h"
#include "ledsim/rng.h"

namespace ledsim {

namespace {

constexpr std::string_view kHeader = "ledsim-scenario v1";

FlowSpec Ledbat(double start_s = 0, bool slow_start = false) {
  FlowSpec f;
  f.kind = FlowKind::kLedbat;
  f.start_s = start_s;
  f.ledbat.slow_start = slow_start;
  return f;
}

FlowSpec Tcp(double start_s = 0, bool slow_start = false) {
  FlowSpec f;
  f.kind = FlowKind::kTcp;
  f.start_s = start_s;
  f.tcp.slow_start = slow_start;
  return f;
}

Scenario Base(std::string name, std::int64_t capacity_bps, int buffer_pkts,
              std::vector<FlowSpec> flows) {
  Scenario s;
  s.name = std::move(name);
  s.capacity_bps = capacity_bps;
  s.buffer_pkts = buffer_pkts;
  s.flows = std::move(flows);
  return s;
}

Scenario LateComer(std::string name, double delta_t, int buffer_pkts) {
  Scenario s = Base(std::move(name), 10'000'000, buffer_pkts, {Ledbat(), Ledbat(delta_t)});
  s.delta_t.mode = DeltaT::Mode::kFixed;
  s.delta_t.fixed_s = delta_t;
  return s;
}

std::string_view Trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

struct Entry {
  std::string value;
  int line = 0;
};

class SectionReader {
 public:
  SectionReader(const std::string& source, std::map<std::string, Entry> entries, int header_line)
      : source_(source), entries_(std::move(entries)), header_line_(header_line) {}

  bool Has(const std::string& key) const { return entries_.count(key) != 0; }

  void AllowOnly(const std::set<std::string>& allowed, std::string_view section) const {
    for (const auto& [key, e] : entries_) {
      if (!allowed.count(key)) {
        throw ParseError(source_, e.line,
                         fmt::format("unknown key '{}' in {} section", key, section));
      }
    }
  }

  const std::string* Raw(const std::string& key) const {
    auto it = entries_.find(key);
    return it == entries_.end() ? nullptr : &it->second.value;
  }

  template <typename T>
  std::optional<T> Number(const std::string& key) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    const std::string& v = it->second.value;
    T out{};
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size()) {
      throw ParseError(source_, it->second.line,
                       fmt::format("key '{}': '{}' is not a valid number", key, v));
    }
    return out;
  }

  std::optional<bool> OnOff(const std::string& key) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    const std::string& v = it->second.value;
    if (v == "on") return true;
    if (v == "off") return false;
    throw ParseError(source_, it->second.line,
                     fmt::format("key '{}': expected on|off, got '{}'", key, v));
  }

  [[noreturn]] void Fail(const std::string& key, const std::string& message) const {
    auto it = entries_.find(key);
    throw ParseError(source_, it == entries_.end() ? header_line_ : it->second.line,
                     fmt::format("key '{}': {}", key, message));
  }

  int header_line() const { return header_line_; }

 private:
  const std::string& source_;
  std::map<std::string, Entry> entries_;
  int header_line_;
};

DeltaT ParseDeltaT(const SectionReader& r, const std::string& value) {
  DeltaT dt;
  auto to_double = [&](std::string_view s) {
    double out = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
      r.Fail("delta_t", fmt::format("bad number '{}'", s));
    }
    return out;
  };
  std::string_view v = value;
  if (v == "none") return dt;
  if (v.starts_with("fixed:")) {
    dt.mode = DeltaT::Mode::kFixed;
    dt.fixed_s = to_double(v.substr(6));
    return dt;
  }
  if (v.starts_with("uniform:")) {
    std::string_view rest = v.substr(8);
    auto colon = rest.find(':');
    if (colon == std::string_view::npos) r.Fail("delta_t", "expected uniform:<lo>:<hi>");
    dt.mode = DeltaT::Mode::kUniform;
    dt.lo_s = to_double(rest.substr(0, colon));
    dt.hi_s = to_double(rest.substr(colon + 1));
    return dt;
  }
  r.Fail("delta_t", fmt::format("expected none, fixed:<s> or uniform:<lo>:<hi>, got '{}'", value));
}

FlowSpec ParseFlow(const SectionReader& r) {
  const std::string* kind = r.Raw("kind");
  if (!kind) {
    throw ParseError("", r.header_line(), "flow section is missing required key 'kind'");
  }
  FlowSpec f;
  if (*kind == "tcp") {
    r.AllowOnly({"kind", "start_s", "slow_start", "initial_cwnd", "clock_offset_us",
                 "receiver_clock_offset_us"},
                "tcp flow");
    f.kind = FlowKind::kTcp;
    if (auto v = r.OnOff("slow_start")) f.tcp.slow_start = *v;
    if (auto v = r.Number<double>("initial_cwnd")) f.tcp.initial_cwnd_pkts = *v;
    if (auto v = r.Number<std::int64_t>("clock_offset_us")) f.tcp.clock_offset_us = *v;
  } else if (*kind == "ledbat") {
    r.AllowOnly({"kind", "start_s", "target_ms", "gain_mode", "gain", "pacing", "slow_start",
                 "base_histo_min", "clock_offset_us", "receiver_clock_offset_us",
                 "initial_cwnd", "min_cwnd", "estimator"},
                "ledbat flow");
    f.kind = FlowKind::kLedbat;
    LedbatConfig& c = f.ledbat;
    if (auto v = r.Number<double>("target_ms")) c.target_us = std::llround(*v * 1000.0);
    const std::string* mode = r.Raw("gain_mode");
    const std::string* gain = r.Raw("gain");
    if (mode && *mode == "explicit") {
      if (!gain) r.Fail("gain_mode", "explicit gain_mode needs a 'gain = <num>/<den_us>' key");
      auto slash = gain->find('/');
      Gain g;
      auto parse = [&](std::string_view s, std::int64_t& out) {
        auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
        if (ec != std::errc() || ptr != s.data() + s.size()) {
          r.Fail("gain", fmt::format("expected <num>/<den_us>, got '{}'", *gain));
        }
      };
      if (slash == std::string::npos) r.Fail("gain", "expected <num>/<den_us>");
      parse(std::string_view(*gain).substr(0, slash), g.num);
      parse(std::string_view(*gain).substr(slash + 1), g.den_us);
      c.explicit_gain = g;
    } else if (mode && *mode != "one_over_target") {
      r.Fail("gain_mode", fmt::format("expected one_over_target|explicit, got '{}'", *mode));
    } else if (gain) {
      r.Fail("gain", "only valid with gain_mode = explicit");
    }
    if (auto v = r.OnOff("pacing")) c.pacing = *v;
    if (auto v = r.OnOff("slow_start")) c.slow_start = *v;
    if (auto v = r.Number<int>("base_histo_min")) c.base_histo_minutes = *v;
    if (auto v = r.Number<std::int64_t>("clock_offset_us")) c.clock_offset_us = *v;
    if (auto v = r.Number<double>("initial_cwnd")) c.initial_cwnd_pkts = *v;
    if (auto v = r.Number<double>("min_cwnd")) c.min_cwnd_pkts = *v;
    if (const std::string* e = r.Raw("estimator")) {
      if (*e == "pinned_zero") {
        c.pin_queuing_delay_zero = true;
      } else if (*e != "normal") {
        r.Fail("estimator", fmt::format("expected normal|pinned_zero, got '{}'", *e));
      }
    }
  } else {
    r.Fail("kind", fmt::format("unknown flow kind '{}'", *kind));
  }
  if (auto v = r.Number<double>("start_s")) f.start_s = *v;
  if (auto v = r.Number<std::int64_t>("receiver_clock_offset_us")) f.receiver_clock_offset_us = *v;
  return f;
}

}  // namespace

ParseError::ParseError(const std::string& source, int line, const std::string& message)
    : std::runtime_error(fmt::format("{}:{}: {}", source, line, message)), line_(line) {}

void Scenario::Validate() const {
  if (capacity_bps <= 0) throw ValidationError("capacity_bps must be positive");
  if (buffer_pkts <= 0) throw ValidationError("buffer_pkts must be positive");
  if (rtt_base_us <= 0) throw ValidationError("rtt_base_us must be positive");
  if (packet_bytes == 0) throw ValidationError("packet_bytes must be positive");
  if (!(duration_s > 0)) throw ValidationError("duration_s must be positive");
  if (sample_ms <= 0) throw ValidationError("sample_ms must be positive");
  if (flows.empty()) throw ValidationError("scenario needs at least one flow");
  if (TransmissionTime(packet_bytes, capacity_bps).us() > rtt_base_us / 2) {
    throw ValidationError("packet service time exceeds the one-way base delay");
  }
  if (start_jitter_s < 0) throw ValidationError("start_jitter_s must be non-negative");
  if (delta_t.mode != DeltaT::Mode::kFlowStart && flows.size() < 2) {
    throw ValidationError("delta_t needs at least two flows");
  }
  if (delta_t.mode == DeltaT::Mode::kFixed && delta_t.fixed_s < 0) {
    throw ValidationError("delta_t must be non-negative");
  }
  if (delta_t.mode == DeltaT::Mode::kUniform && !(delta_t.lo_s >= 0 && delta_t.lo_s < delta_t.hi_s)) {
    throw ValidationError("delta_t uniform range must satisfy 0 <= lo < hi");
  }
  for (std::size_t i = 0; i < flows.size(); ++i) {
    const FlowSpec& f = flows[i];
    if (f.start_s < 0 || f.start_s >= duration_s) {
      throw ValidationError(fmt::format("flow {}: start_s must lie in [0, duration_s)", i));
    }
    if (f.kind == FlowKind::kLedbat) {
      try {
        f.ledbat.Validate();
      } catch (const ConfigError& e) {
        throw ValidationError(fmt::format("flow {}: {}", i, e.what()));
      }
    } else if (f.tcp.initial_cwnd_pkts < 1) {
      throw ValidationError(fmt::format("flow {}: initial_cwnd must be >= 1", i));
    }
  }
}

std::optional<Scenario> Preset(std::string_view name) {
  if (name == "fig2a" || name == "hs-b40-tcp-vs-ledbat") {
    return Base("hs-b40-tcp-vs-ledbat", 10'000'000, 40, {Tcp(), Ledbat()});
  }
  if (name == "fig2b" || name == "hs-b40-ledbat-vs-ledbat") {
    return Base("hs-b40-ledbat-vs-ledbat", 10'000'000, 40, {Ledbat(), Ledbat()});
  }
  if (name == "hs-b40-tcp-alone") return Base(std::string(name), 10'000'000, 40, {Tcp()});
  if (name == "hs-b40-ledbat-alone") return Base(std::string(name), 10'000'000, 40, {Ledbat()});
  if (name == "hs-b40-tcp-vs-tcp") return Base(std::string(name), 10'000'000, 40, {Tcp(), Tcp()});
  if (name == "fig3-top") return LateComer("fig3-top", 2, 40);
  if (name == "fig3-mid") return LateComer("fig3-mid", 10, 40);
  if (name == "fig3-bottom") return LateComer("fig3-bottom", 10, 100);
  if (name == "adsl-down-tcp-vs-ledbat") {
    return Base(std::string(name), 2'000'000, 10, {Tcp(), Ledbat()});
  }
  if (name == "adsl-up-tcp-vs-ledbat") {
    return Base(std::string(name), 500'000, 10, {Tcp(), Ledbat()});
  }
  for (const Table1Cell& cell : Table1Grid()) {
    if (cell.PresetName() == name) return Table1Scenario(cell);
  }
  return std::nullopt;
}

std::vector<std::string> PresetNames() {
  std::vector<std::string> names = {
      "fig2a",         "hs-b40-tcp-vs-ledbat",    "fig2b",
      "hs-b40-ledbat-vs-ledbat", "hs-b40-tcp-alone", "hs-b40-ledbat-alone",
      "hs-b40-tcp-vs-tcp", "fig3-top",           "fig3-mid",
      "fig3-bottom",   "adsl-down-tcp-vs-ledbat", "adsl-up-tcp-vs-ledbat"};
  for (const Table1Cell& cell : Table1Grid()) names.push_back(cell.PresetName());
  return names;
}

Scenario ParseScenario(std::string_view text, const std::string& source) {
  std::istringstream in{std::string(text)};
  std::string raw;
  int line_no = 0;
  bool seen_header = false;

  std::map<std::string, Entry> globals;
  std::vector<std::pair<int, std::map<std::string, Entry>>> flow_sections;
  std::map<std::string, Entry>* current = &globals;

  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = Trim(raw);
    if (!seen_header) {
      if (line.empty()) continue;
      if (line != kHeader) {
        throw ParseError(source, line_no,
                         fmt::format("expected header '{}', got '{}'", kHeader, line));
      }
      seen_header = true;
      continue;
    }
    if (line.empty() || line.front() == '#') continue;
    if (line == "[flow]") {
      flow_sections.emplace_back(line_no, std::map<std::string, Entry>{});
      current = &flow_sections.back().second;
      continue;
    }
    if (line.front() == '[') {
      throw ParseError(source, line_no, fmt::format("unknown section '{}'", line));
    }
    auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ParseError(source, line_no, fmt::format("expected 'key = value', got '{}'", line));
    }
    std::string key(Trim(line.substr(0, eq)));
    std::string value(Trim(line.substr(eq + 1)));
    if (key.empty()) throw ParseError(source, line_no, "empty key");
    if (current->count(key)) {
      throw ParseError(source, line_no, fmt::format("duplicate key '{}'", key));
    }
    (*current)[key] = Entry{value, line_no};
  }
  if (!seen_header) throw ParseError(source, line_no, "empty scenario file");

  SectionReader g(source, globals, 1);
  g.AllowOnly({"name", "capacity_bps", "buffer_pkts", "rtt_base_us", "packet_bytes", "duration_s",
               "seed", "sample_ms", "delta_t", "start_jitter_s"},
              "global");
  Scenario s;
  if (const std::string* v = g.Raw("name")) s.name = *v;
  if (auto v = g.Number<std::int64_t>("capacity_bps")) s.capacity_bps = *v;
  if (auto v = g.Number<int>("buffer_pkts")) s.buffer_pkts = *v;
  if (auto v = g.Number<std::int64_t>("rtt_base_us")) s.rtt_base_us = *v;
  if (auto v = g.Number<std::uint32_t>("packet_bytes")) s.packet_bytes = *v;
  if (auto v = g.Number<double>("duration_s")) s.duration_s = *v;
  if (auto v = g.Number<std::uint64_t>("seed")) s.seed = *v;
  if (auto v = g.Number<int>("sample_ms")) s.sample_ms = *v;
  if (auto v = g.Number<double>("start_jitter_s")) s.start_jitter_s = *v;
  if (const std::string* v = g.Raw("delta_t")) s.delta_t = ParseDeltaT(g, *v);

  for (auto& [header_line, entries] : flow_sections) {
    SectionReader fr(source, entries, header_line);
    try {
      s.flows.push_back(ParseFlow(fr));
    } catch (const ParseError& e) {
      if (e.line() == header_line && !fr.Has("kind")) {
        throw ParseError(source, header_line, "flow section is missing required key 'kind'");
      }
      throw;
    }
  }
  s.Validate();
  return s;
}

Scenario LoadScenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path.string(), 0, "cannot open scenario file");
  std::stringstream buf;
  buf << in.rdbuf();
  return ParseScenario(buf.str(), path.string());
}

std::string FormatScenario(const Scenario& s) {
  std::string out;
  auto add = [&out](std::string_view line) {
    out += line;
    out += '\n';
  };
  add(kHeader);
  add(fmt::format("name = {}", s.name));
  add(fmt::format("capacity_bps = {}", s.capacity_bps));
  add(fmt::format("buffer_pkts = {}", s.buffer_pkts));
  add(fmt::format("rtt_base_us = {}", s.rtt_base_us));
  add(fmt::format("packet_bytes = {}", s.packet_bytes));
  add(fmt::format("duration_s = {}", s.duration_s));
  add(fmt::format("seed = {}", s.seed));
  add(fmt::format("sample_ms = {}", s.sample_ms));
  switch (s.delta_t.mode) {
    case DeltaT::Mode::kFlowStart: add("delta_t = none"); break;
    case DeltaT::Mode::kFixed: add(fmt::format("delta_t = fixed:{}", s.delta_t.fixed_s)); break;
    case DeltaT::Mode::kUniform:
      add(fmt::format("delta_t = uniform:{}:{}", s.delta_t.lo_s, s.delta_t.hi_s));
      break;
  }
  add(fmt::format("start_jitter_s = {}", s.start_jitter_s));
  auto on_off = [](bool b) { return b ? "on" : "off"; };
  for (const FlowSpec& f : s.flows) {
    add("");
    add("[flow]");
    add(fmt::format("kind = {}", FlowKindName(f.kind)));
    add(fmt::format("start_s = {}", f.start_s));
    if (f.kind == FlowKind::kTcp) {
      add(fmt::format("slow_start = {}", on_off(f.tcp.slow_start)));
      add(fmt::format("initial_cwnd = {}", f.tcp.initial_cwnd_pkts));
      add(fmt::format("clock_offset_us = {}", f.tcp.clock_offset_us));
    } else {
      const LedbatConfig& c = f.ledbat;
      add(fmt::format("target_ms = {}", static_cast<double>(c.target_us) / 1000.0));
      if (c.explicit_gain) {
        add("gain_mode = explicit");
        add(fmt::format("gain = {}/{}", c.explicit_gain->num, c.explicit_gain->den_us));
      } else {
        add("gain_mode = one_over_target");
      }
      add(fmt::format("pacing = {}", on_off(c.pacing)));
      add(fmt::format("slow_start = {}", on_off(c.slow_start)));
      add(fmt::format("base_histo_min = {}", c.base_histo_minutes));
      add(fmt::format("clock_offset_us = {}", c.clock_offset_us));
      add(fmt::format("initial_cwnd = {}", c.initial_cwnd_pkts));
      add(fmt::format("min_cwnd = {}", c.min_cwnd_pkts));
      add(fmt::format("estimator = {}", c.pin_queuing_delay_zero ? "pinned_zero" : "normal"));
    }
    add(fmt::format("receiver_clock_offset_us = {}", f.receiver_clock_offset_us));
  }
  return out;
}

std::vector<SimTime> ResolveStarts(const Scenario& s) {
  std::vector<SimTime> starts;
  for (const FlowSpec& f : s.flows) starts.push_back(SecondsToSimTime(f.start_s));
  if (s.flows.size() < 2) return starts;
  Rng rng = Rng::Split(s.seed, 0);
  double second = s.flows[1].start_s;
  switch (s.delta_t.mode) {
    case DeltaT::Mode::kFlowStart: break;
    case DeltaT::Mode::kFixed: second = s.delta_t.fixed_s; break;
    case DeltaT::Mode::kUniform: second = rng.Uniform(s.delta_t.lo_s, s.delta_t.hi_s); break;
  }
  if (s.start_jitter_s > 0) second += rng.Uniform(0.0, s.start_jitter_s);
  starts[1] = SecondsToSimTime(second);
  return starts;
}

}  // namespace ledsim
