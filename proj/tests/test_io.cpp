#include "pcbf/io.hpp"

#include "support.hpp"

#include <doctest.h>
#include <json.hpp>

#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

using namespace pcbf;

namespace {

Trajectory short_log() {
  ScenarioConfig c;
  c.horizon = 20;
  c.vehicles = {test::vehicle("ego", Role::kEgo, Lane::kMain, Vec2(0, 0), Vec2(10, 0)),
                test::vehicle("obj", Role::kObject, Lane::kMain, Vec2(8, 0), Vec2(9, 0))};
  return run_trial(c).log;
}

}  // namespace

TEST_SUITE("io") {

TEST_CASE("doubles are written with 17 significant digits") {
  CHECK(format_double(0.1) == "0.10000000000000001");
  CHECK(format_double(1.0) == "1");
  CHECK(format_double(-2.5e-10) == "-2.5000000000000002e-10");
}

TEST_CASE("format/parse round trip is exact") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int k = 0; k < 1000; ++k) {
    const double v = u(rng) * std::pow(10.0, static_cast<int>(rng() % 40) - 20);
    CHECK(parse_double(format_double(v)) == v);
  }
  CHECK(parse_double(format_double(std::numeric_limits<double>::min())) ==
        std::numeric_limits<double>::min());
  CHECK_THROWS_AS(parse_double("1.5x"), CsvError);
  CHECK_THROWS_AS(parse_double(""), CsvError);
}

TEST_CASE("trajectory CSV round trip") {
  const Trajectory log = short_log();
  std::stringstream s;
  write_trajectory_csv(s, log);
  std::string header;
  std::getline(std::istringstream(s.str()), header);
  CHECK(header == "step,vehicle,x,y,vx,vy,ux,uy,infeasible,h[ego|obj]");
  const Trajectory back = read_trajectory_csv(s);
  CHECK(back == log);
}

TEST_CASE("malformed trajectory is rejected") {
  std::istringstream bad("step,vehicle,x\n0,ego,1\n");
  CHECK_THROWS_AS(read_trajectory_csv(bad), CsvError);
}

TEST_CASE("samples CSV round trip") {
  std::vector<BarrierSample> v;
  for (long k = 0; k < 5; ++k) {
    BarrierSample s;
    s.step = 10 + k;
    s.basis = basis(0.3 * static_cast<double>(k) + 0.1, 2);
    s.hdot_obs = -1.0 / 3.0 * static_cast<double>(k);
    v.push_back(s);
  }
  std::stringstream s;
  write_samples_csv(s, v);
  const auto back = read_samples_csv(s);
  REQUIRE(back.size() == v.size());
  for (std::size_t k = 0; k < v.size(); ++k) {
    CHECK(back[k].step == v[k].step);
    CHECK(back[k].hdot_obs == v[k].hdot_obs);
    CHECK(back[k].basis.values == v[k].basis.values);
  }
}

TEST_CASE("estimate rows carry the step of the producing sample") {
  std::vector<BarrierSample> samples(3);
  samples[0].step = 4;
  samples[1].step = 9;
  samples[2].step = 12;
  std::vector<AlphaEstimate> hist = {{AlphaVector{1.0, 0.0}, {}, 1, false},
                                     {AlphaVector{1.1, 0.0}, {}, 3, true}};
  const auto rows = estimate_rows("t0", hist, samples);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].step == 4);
  CHECK(rows[1].step == 12);
  CHECK(rows[1].converged);
  std::ostringstream out;
  write_estimates_csv(out, rows);
  CHECK(out.str().find("t0,1,12,3,1,1.1000000000000001,0") != std::string::npos);
}

TEST_CASE("sha256 known answers") {
  // [DERIVED] FIPS 180-2 test vectors.
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST_CASE("manifest lists every file with size and hash") {
  const auto dir = test::scratch_dir("manifest");
  std::filesystem::create_directories(dir / "sub");
  std::ofstream(dir / "b.txt") << "abc";
  std::ofstream(dir / "sub" / "a.csv") << "x\n";
  RunManifest m;
  m.experiment = "predict";
  m.seed = 3;
  m.collect(dir);
  REQUIRE(m.files.size() == 2);
  CHECK(m.files[0].path == "b.txt");
  CHECK(m.files[1].path == "sub/a.csv");
  CHECK(m.files[0].bytes == 3);
  CHECK(m.files[0].sha256 == sha256_hex("abc"));
  m.write(dir);
  CHECK(sha256_file(dir / "b.txt") == sha256_hex("abc"));

  std::ifstream in(dir / kManifestName);
  const auto j = nlohmann::json::parse(in);
  CHECK(j["experiment"] == "predict");
  CHECK(j["seed"] == 3);
  CHECK(j["files"].size() == 2);

  // Re-collecting skips the manifest itself.
  RunManifest again;
  again.collect(dir);
  CHECK(again.files.size() == 2);
  std::filesystem::remove_all(dir);
}

TEST_CASE("summary CSV writer") {
  std::ostringstream out;
  write_csv(out, {"a", "b"}, {{"1", "x"}, {"2", "y"}});
  CHECK(out.str() == "a,b\n1,x\n2,y\n");
}

}  // TEST_SUITE
