#include "pcbf/io.hpp"

#include <json.hpp>
#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <charconv>
#include <fstream>
#include <istream>
#include <memory>
#include <ostream>
#include <sstream>

namespace pcbf {

namespace {

std::vector<std::string> split(std::string_view line, char sep = ',') {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t p = line.find(sep, start);
    out.emplace_back(line.substr(start, p == std::string_view::npos ? p : p - start));
    if (p == std::string_view::npos) break;
    start = p + 1;
  }
  return out;
}

bool next_line(std::istream& in, std::string& line) {
  if (!std::getline(in, line)) return false;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return true;
}

long parse_long(std::string_view s) {
  long v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) {
    throw CsvError("not an integer: '" + std::string(s) + "'");
  }
  return v;
}

std::string pair_column(const std::vector<std::string>& ids, std::pair<int, int> p) {
  return "h[" + ids[p.first] + "|" + ids[p.second] + "]";
}

std::string to_hex(const unsigned char* d, unsigned n) {
  static constexpr char kHex[] = "0123456789abcdef";
  std::string s;
  s.reserve(2 * n);
  for (unsigned i = 0; i < n; ++i) {
    s.push_back(kHex[d[i] >> 4]);
    s.push_back(kHex[d[i] & 0xF]);
  }
  return s;
}

struct DigestCtx {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx{EVP_MD_CTX_new(), &EVP_MD_CTX_free};
  DigestCtx() {
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
      throw std::runtime_error("sha256: digest init failed");
    }
  }
  void update(const void* p, std::size_t n) {
    if (EVP_DigestUpdate(ctx.get(), p, n) != 1) throw std::runtime_error("sha256: update failed");
  }
  std::string hex() {
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned n = 0;
    if (EVP_DigestFinal_ex(ctx.get(), md.data(), &n) != 1) {
      throw std::runtime_error("sha256: final failed");
    }
    return to_hex(md.data(), n);
  }
};

}  // namespace

std::string format_double(double v) {
  std::array<char, 64> buf{};
  const auto [p, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v,
                                     std::chars_format::general, 17);
  if (ec != std::errc()) throw CsvError("format_double failed");
  return std::string(buf.data(), p);
}

double parse_double(std::string_view s) {
  double v = 0.0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) {
    throw CsvError("not a number: '" + std::string(s) + "'");
  }
  return v;
}

void write_trajectory_csv(std::ostream& out, const Trajectory& log) {
  out << "step,vehicle,x,y,vx,vy,ux,uy,infeasible";
  for (const auto& p : log.pairs) out << ',' << pair_column(log.vehicle_ids, p);
  out << '\n';
  for (const StepRecord& rec : log.steps) {
    for (std::size_t v = 0; v < log.vehicle_ids.size(); ++v) {
      const VehicleState& s = rec.states[v];
      const Vec2& u = rec.inputs[v].acceleration;
      out << rec.step << ',' << log.vehicle_ids[v] << ',' << format_double(s.position.x()) << ','
          << format_double(s.position.y()) << ',' << format_double(s.velocity.x()) << ','
          << format_double(s.velocity.y()) << ',' << format_double(u.x()) << ','
          << format_double(u.y()) << ',' << int(rec.infeasible[v]);
      for (double h : rec.pair_h) out << ',' << format_double(h);
      out << '\n';
    }
  }
}

Trajectory read_trajectory_csv(std::istream& in) {
  std::string line;
  if (!next_line(in, line)) throw CsvError("trajectory csv: empty input");
  const std::vector<std::string> header = split(line);
  static const std::vector<std::string> kFixed = {"step", "vehicle", "x",  "y",         "vx",
                                                  "vy",   "ux",      "uy", "infeasible"};
  if (header.size() < kFixed.size() || !std::equal(kFixed.begin(), kFixed.end(), header.begin())) {
    throw CsvError("trajectory csv: unexpected header");
  }
  const std::size_t n_pairs = header.size() - kFixed.size();

  Trajectory log;
  std::vector<std::pair<std::string, std::string>> pair_names;
  for (std::size_t k = kFixed.size(); k < header.size(); ++k) {
    const std::string& c = header[k];
    const auto bar = c.find('|');
    if (c.size() < 5 || c.rfind("h[", 0) != 0 || c.back() != ']' || bar == std::string::npos) {
      throw CsvError("trajectory csv: bad pair column '" + c + "'");
    }
    pair_names.emplace_back(c.substr(2, bar - 2), c.substr(bar + 1, c.size() - bar - 2));
  }

  std::size_t row = 1;
  bool ids_closed = false;  // vehicle roster is fixed once the first step ends
  std::size_t v = 0;
  while (next_line(in, line)) {
    ++row;
    if (line.empty()) continue;
    const std::vector<std::string> f = split(line);
    const std::string where = "trajectory csv: row " + std::to_string(row);
    if (f.size() != header.size()) throw CsvError(where + ": wrong field count");
    const long step = parse_long(f[0]);
    if (log.steps.empty() || step != log.steps.back().step) {
      if (!log.steps.empty()) {
        ids_closed = true;
        if (v != log.vehicle_ids.size()) throw CsvError(where + ": previous step is incomplete");
      }
      log.steps.emplace_back();
      log.steps.back().step = step;
      v = 0;
    }
    StepRecord& rec = log.steps.back();
    if (!ids_closed) {
      const auto& ids = log.vehicle_ids;
      if (std::find(ids.begin(), ids.end(), f[1]) != ids.end()) {
        throw CsvError(where + ": duplicate vehicle in step");
      }
      log.vehicle_ids.push_back(f[1]);
    } else if (v >= log.vehicle_ids.size() || f[1] != log.vehicle_ids[v]) {
      throw CsvError(where + ": unexpected vehicle '" + f[1] + "'");
    }
    VehicleState s;
    s.position = Vec2(parse_double(f[2]), parse_double(f[3]));
    s.velocity = Vec2(parse_double(f[4]), parse_double(f[5]));
    rec.states.push_back(s);
    rec.inputs.push_back(ControlInput{Vec2(parse_double(f[6]), parse_double(f[7]))});
    rec.infeasible.push_back(static_cast<char>(parse_long(f[8])));
    std::vector<double> h(n_pairs);
    for (std::size_t p = 0; p < n_pairs; ++p) h[p] = parse_double(f[kFixed.size() + p]);
    if (v == 0) {
      rec.pair_h = std::move(h);
    } else if (h != rec.pair_h) {
      throw CsvError(where + ": pair values disagree");
    }
    ++v;
  }
  if (!log.steps.empty() && log.steps.back().states.size() != log.vehicle_ids.size()) {
    throw CsvError("trajectory csv: truncated final step");
  }

  auto index_of = [&](const std::string& id) {
    const auto it = std::find(log.vehicle_ids.begin(), log.vehicle_ids.end(), id);
    if (it == log.vehicle_ids.end()) throw CsvError("trajectory csv: unknown vehicle '" + id + "'");
    return static_cast<int>(it - log.vehicle_ids.begin());
  };
  for (const auto& [a, b] : pair_names) log.pairs.emplace_back(index_of(a), index_of(b));
  return log;
}

void write_samples_csv(std::ostream& out, const std::vector<BarrierSample>& samples) {
  const std::size_t q = samples.empty() ? 1 : samples.front().basis.size();
  out << "step,h,hdot";
  for (std::size_t p = 0; p < q; ++p) out << ",H" << p;
  out << '\n';
  for (const auto& s : samples) {
    if (s.basis.size() != q) throw CsvError("samples csv: mixed basis lengths");
    out << s.step << ',' << format_double(s.h()) << ',' << format_double(s.hdot_obs);
    for (double b : s.basis.values) out << ',' << format_double(b);
    out << '\n';
  }
}

std::vector<BarrierSample> read_samples_csv(std::istream& in) {
  std::string line;
  if (!next_line(in, line)) throw CsvError("samples csv: empty input");
  const std::vector<std::string> header = split(line);
  if (header.size() < 4 || header[0] != "step" || header[1] != "h" || header[2] != "hdot") {
    throw CsvError("samples csv: unexpected header");
  }
  const std::size_t q = header.size() - 3;
  std::vector<BarrierSample> out;
  while (next_line(in, line)) {
    if (line.empty()) continue;
    const std::vector<std::string> f = split(line);
    if (f.size() != header.size()) throw CsvError("samples csv: wrong field count");
    BarrierSample s;
    s.step = parse_long(f[0]);
    s.hdot_obs = parse_double(f[2]);
    s.basis.values.resize(q);
    for (std::size_t p = 0; p < q; ++p) s.basis.values[p] = parse_double(f[3 + p]);
    if (s.basis.values[0] != parse_double(f[1])) throw CsvError("samples csv: h disagrees with H0");
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<EstimateRow> estimate_rows(const std::string& series,
                                       const std::vector<AlphaEstimate>& history,
                                       const std::vector<BarrierSample>& samples) {
  std::vector<EstimateRow> rows;
  rows.reserve(history.size());
  for (std::size_t k = 0; k < history.size(); ++k) {
    const AlphaEstimate& e = history[k];
    EstimateRow r;
    r.series = series;
    r.index = static_cast<long>(k);
    r.n_samples = e.n_samples;
    const bool known = e.n_samples >= 1 && e.n_samples <= samples.size();
    r.step = known ? samples[e.n_samples - 1].step : -1;
    r.converged = e.converged;
    r.alpha.assign(e.alpha_hat.coefficients().begin(), e.alpha_hat.coefficients().end());
    rows.push_back(std::move(r));
  }
  return rows;
}

void write_estimates_csv(std::ostream& out, const std::vector<EstimateRow>& rows) {
  std::size_t q = 1;
  for (const auto& r : rows) q = std::max(q, r.alpha.size());
  out << "series,index,step,n_samples,converged";
  for (std::size_t p = 0; p < q; ++p) out << ",alpha" << p;
  out << '\n';
  for (const auto& r : rows) {
    out << r.series << ',' << r.index << ',' << r.step << ',' << r.n_samples << ','
        << (r.converged ? 1 : 0);
    for (std::size_t p = 0; p < q; ++p) {
      out << ',' << format_double(p < r.alpha.size() ? r.alpha[p] : 0.0);
    }
    out << '\n';
  }
}

void write_csv(std::ostream& out, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t k = 0; k < cells.size(); ++k) out << (k ? "," : "") << cells[k];
    out << '\n';
  };
  line(header);
  for (const auto& r : rows) {
    if (r.size() != header.size()) throw CsvError("csv: row width differs from header");
    line(r);
  }
}

std::string sha256_hex(std::string_view bytes) {
  DigestCtx d;
  d.update(bytes.data(), bytes.size());
  return d.hex();
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  DigestCtx d;
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    if (in.gcount() > 0) d.update(buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  if (in.bad()) throw std::runtime_error("read error on " + path.string());
  return d.hex();
}

void RunManifest::collect(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  files.clear();
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    const std::string rel = fs::relative(e.path(), dir).generic_string();
    if (rel == kManifestName) continue;
    files.push_back({rel, e.file_size(), sha256_file(e.path())});
  }
  std::sort(files.begin(), files.end(),
            [](const ManifestEntry& a, const ManifestEntry& b) { return a.path < b.path; });
}

std::string RunManifest::to_json() const {
  nlohmann::ordered_json j;
  j["experiment"] = experiment;
  j["config"] = config_path;
  j["seed"] = seed;
  j["out_dir"] = out_dir;
  j["files"] = nlohmann::ordered_json::array();
  for (const auto& f : files) {
    j["files"].push_back({{"path", f.path}, {"bytes", f.bytes}, {"sha256", f.sha256}});
  }
  return j.dump(2) + "\n";
}

void RunManifest::write(const std::filesystem::path& dir) const {
  std::ofstream out(dir / kManifestName, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write manifest in " + dir.string());
  out << to_json();
}

}  // namespace pcbf
