#pragma once

#include "pcbf/learner.hpp"
#include "pcbf/scenario.hpp"

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace pcbf {

class CsvError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shortest-safe text form: 17 significant digits, round-trips exactly.
std::string format_double(double v);
/// Whole-string parse; throws CsvError on junk.
double parse_double(std::string_view s);

// Trajectory CSV, one row per (step, vehicle):
//   step,vehicle,x,y,vx,vy,ux,uy,infeasible,h[a|b],...
// The pair columns repeat the step's pairwise h on every vehicle row.
void write_trajectory_csv(std::ostream& out, const Trajectory& log);
Trajectory read_trajectory_csv(std::istream& in);

// Sample CSV: step,h,hdot,H0,H1,...
void write_samples_csv(std::ostream& out, const std::vector<BarrierSample>& samples);
std::vector<BarrierSample> read_samples_csv(std::istream& in);

/// Estimate history of one learner: index,step,n_samples,converged,alpha0,...
/// `steps[k]` is the simulation step of the sample that produced history[k].
struct EstimateRow {
  std::string series;  // e.g. trial number
  long index = 0;
  long step = 0;
  std::size_t n_samples = 0;
  bool converged = false;
  std::vector<double> alpha;
};
void write_estimates_csv(std::ostream& out, const std::vector<EstimateRow>& rows);
std::vector<EstimateRow> estimate_rows(const std::string& series,
                                       const std::vector<AlphaEstimate>& history,
                                       const std::vector<BarrierSample>& samples);

/// Generic CSV writer for summary tables; cells are written verbatim.
void write_csv(std::ostream& out, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

/// Lowercase hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);
std::string sha256_hex(std::string_view bytes);

struct ManifestEntry {
  std::string path;  // relative to the output directory, '/' separated
  std::uintmax_t bytes = 0;
  std::string sha256;
};

struct RunManifest {
  std::string experiment;
  std::string config_path;
  std::uint64_t seed = 0;
  std::string out_dir;
  std::vector<ManifestEntry> files;

  /// Hashes every regular file under out_dir (except the manifest itself),
  /// sorted by path.
  void collect(const std::filesystem::path& dir);
  std::string to_json() const;
  void write(const std::filesystem::path& dir) const;  // dir/manifest.json
};

inline constexpr const char* kManifestName = "manifest.json";

}  // namespace pcbf
