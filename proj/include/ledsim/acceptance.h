#ifndef LEDSIM_ACCEPTANCE_H_
#define LEDSIM_ACCEPTANCE_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "ledsim/harness.h"

namespace ledsim {

struct AcceptanceOptions {
  int runs = 20;  // per table1 grid cell
  std::uint64_t seed = 7;
  int jobs = 1;
  // Fault injection, applied to every scenario the suite runs.
  double gain_scale = 1.0;  // LEDBAT GAIN = gain_scale / TARGET
  bool force_no_slow_start = false;
  // Where the determinism check writes its two output sets. Empty: a fresh
  // directory under the system temp path.
  std::filesystem::path scratch_dir;
};

struct CriterionResult {
  std::string id;
  std::string title;
  bool pass = false;
  std::string measured;
  std::string expected;
};

// One line: "PASS 1a <title> | measured ... | expected ...".
std::string FormatCriterion(const CriterionResult& r);

// Runs every criterion in order, reporting each through `on_result` as soon
// as it is decided.
std::vector<CriterionResult> RunAcceptance(
    const AcceptanceOptions& opts,
    const std::function<void(const CriterionResult&)>& on_result = {});

// The scenario mutation implied by the fault-injection options.
std::function<void(Scenario&)> FaultMutation(const AcceptanceOptions& opts);

}  // namespace ledsim

#endif  // LEDSIM_ACCEPTANCE_H_
