#ifndef LEDSIM_CLI_H_
#define LEDSIM_CLI_H_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

namespace ledsim::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitAcceptanceFailure = 1;
inline constexpr int kExitUsage = 2;

// Output directory used when --out is absent.
inline constexpr const char* kOutDirEnv = "LEDSIM_OUT_DIR";

struct RunRequest {
  std::string preset;
  std::filesystem::path scenario;
  std::optional<std::uint64_t> seed;
  std::optional<int> sample_ms;
  std::filesystem::path out_dir;
  bool force = false;
};

// Writes trace.csv, summary.csv and flows.csv into out_dir.
int CmdRun(const RunRequest& req, std::ostream& out, std::ostream& err);

// Entry point of the ledsim tool. Returns the process exit code.
int Main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace ledsim::cli

#endif  // LEDSIM_CLI_H_
