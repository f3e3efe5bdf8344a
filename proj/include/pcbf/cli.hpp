#pragma once

#include "pcbf/config.hpp"
#include "pcbf/io.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace pcbf {

namespace exit_code {
inline constexpr int kOk = 0;
inline constexpr int kFailure = 1;    // IO and other runtime errors
inline constexpr int kUsage = 2;      // unknown experiment, bad arguments
inline constexpr int kConfig = 3;     // unreadable or invalid config
inline constexpr int kCollision = 4;  // collision in a safety-critical preset
}  // namespace exit_code

/// Environment variable naming the default output root.
inline constexpr const char* kOutDirEnv = "PCBF_OUT_DIR";

const std::vector<std::string>& experiment_names();

struct RunRequest {
  std::string experiment;
  std::optional<std::filesystem::path> config;  // built-in preset when empty
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> trials;
  std::optional<std::filesystem::path> out_dir;
  std::optional<std::filesystem::path> styles;  // sweep only
};

/// Output directory: --out, else $PCBF_OUT_DIR/<experiment>, else
/// pcbf-out/<experiment>.
std::filesystem::path resolve_out_dir(const RunRequest& req);

/// Runs one experiment, writes its files and manifest.json, and returns the
/// process exit code. Progress goes to `log`, diagnostics to `err`.
int cmd_run(const RunRequest& req, std::ostream& log, std::ostream& err);

/// Prints one "PASS|FAIL rule [detail]" line per rule. Returns 0 unless the
/// file cannot be read.
int cmd_validate(const std::filesystem::path& config, std::ostream& out, std::ostream& err);

}  // namespace pcbf
