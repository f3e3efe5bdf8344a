#include "pcbf/cli.hpp"

#include "support.hpp"

#include <doctest.h>
#include <json.hpp>

#include <cstdlib>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>
#include <sys/wait.h>

using namespace pcbf;
namespace fs = std::filesystem;

namespace {

// Ego drives unfiltered into a parked car; neither filters.
const char* kCrash = R"(
[scenario]
horizon = 300
[vehicle.ego]
role = ego
lane = main
position = 0 0
speed = 10
safety_filter = false
[vehicle.parked]
role = object
lane = main
position = 20 0
speed = 0
desired_speed = 0
safety_filter = false
[sweep]
styles = 1
)";

fs::path write_text(const fs::path& dir, const std::string& name, const std::string& text) {
  std::ofstream(dir / name) << text;
  return dir / name;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

struct Run {
  int code;
  std::string log;
  std::string err;
};

Run run(const RunRequest& req) {
  std::ostringstream log, err;
  const int code = cmd_run(req, log, err);
  return {code, log.str(), err.str()};
}

RunRequest predict_request(const fs::path& out) {
  RunRequest r;
  r.experiment = "predict";
  r.trials = 2;
  r.seed = 4;
  r.out_dir = out;
  return r;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("unknown experiment exits 2") {
  RunRequest r;
  r.experiment = "fly";
  r.out_dir = test::scratch_dir("cli-unknown");
  CHECK(run(r).code == exit_code::kUsage);
  r.experiment = "predict";
  r.styles = "styles.txt";
  CHECK(run(r).code == exit_code::kUsage);
  fs::remove_all(*r.out_dir);
}

TEST_CASE("unparseable config exits 3 and writes nothing") {
  const auto dir = test::scratch_dir("cli-bad");
  RunRequest r;
  r.experiment = "sweep";
  r.config = write_text(dir, "bad.cfg", "[scenario\nhorizon = x\n");
  r.out_dir = dir / "out";
  const Run out = run(r);
  CHECK(out.code == exit_code::kConfig);
  CHECK_FALSE(fs::exists(dir / "out"));
  r.config = dir / "missing.cfg";
  CHECK(run(r).code == exit_code::kConfig);
  fs::remove_all(dir);
}

TEST_CASE("collision in a safety-critical config exits 4 after writing its files") {
  const auto dir = test::scratch_dir("cli-crash");
  RunRequest r;
  r.experiment = "sweep";
  r.config = write_text(dir, "crash.cfg", kCrash);
  r.out_dir = dir / "out";
  const Run out = run(r);
  CHECK(out.code == exit_code::kCollision);
  CHECK(out.err.find("collision") != std::string::npos);
  CHECK(fs::exists(dir / "out" / kManifestName));

  // Marked non-critical, the same run succeeds.
  std::string relaxed = kCrash;
  relaxed.replace(relaxed.find("horizon"), 0, "safety_critical = false\n");
  r.config = write_text(dir, "relaxed.cfg", relaxed);
  CHECK(run(r).code == exit_code::kOk);
  fs::remove_all(dir);
}

TEST_CASE("manifest covers every output file") {
  const auto dir = test::scratch_dir("cli-manifest");
  REQUIRE(run(predict_request(dir)).code == exit_code::kOk);
  std::ifstream in(dir / kManifestName);
  const auto j = nlohmann::json::parse(in);
  CHECK(j["experiment"] == "predict");
  CHECK(j["seed"] == 4);
  std::set<std::string> listed;
  for (const auto& f : j["files"]) {
    const fs::path p = dir / f["path"].get<std::string>();
    REQUIRE(fs::exists(p));
    CHECK(f["sha256"] == sha256_file(p));
    CHECK(f["bytes"] == fs::file_size(p));
    listed.insert(f["path"].get<std::string>());
  }
  std::size_t on_disk = 0;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().filename() != kManifestName) ++on_disk;
  }
  CHECK(on_disk == listed.size());
  for (const char* f : {"metrics.txt", "summary.csv", "estimates.csv",
                        "trajectories/trial_0.csv", "samples/trial_1.csv"}) {
    CHECK(listed.count(f) == 1);
  }
  fs::remove_all(dir);
}

TEST_CASE("same config and seed give byte-identical files") {
  const auto a = test::scratch_dir("cli-det-a");
  const auto b = test::scratch_dir("cli-det-b");
  REQUIRE(run(predict_request(a)).code == 0);
  REQUIRE(run(predict_request(b)).code == 0);
  for (const auto& e : fs::recursive_directory_iterator(a)) {
    if (!e.is_regular_file() || e.path().filename() == kManifestName) continue;
    const fs::path rel = fs::relative(e.path(), a);
    CAPTURE(rel.string());
    CHECK(slurp(e.path()) == slurp(b / rel));
  }
  // Re-running into an own previous output replaces it.
  REQUIRE(run(predict_request(a)).code == 0);
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("a directory holding foreign files is not overwritten") {
  const auto dir = test::scratch_dir("cli-foreign");
  write_text(dir, "thesis.tex", "precious");
  CHECK(run(predict_request(dir)).code == exit_code::kFailure);
  CHECK(slurp(dir / "thesis.tex") == "precious");
  fs::remove_all(dir);
}

TEST_CASE("output directory resolution") {
  RunRequest r;
  r.experiment = "sweep";
  r.out_dir = "explicit";
  CHECK(resolve_out_dir(r) == fs::path("explicit"));
  r.out_dir.reset();
  ::setenv(kOutDirEnv, "/tmp/pcbf-env-root", 1);
  CHECK(resolve_out_dir(r) == fs::path("/tmp/pcbf-env-root/sweep"));
  ::unsetenv(kOutDirEnv);
  CHECK(resolve_out_dir(r) == fs::path("pcbf-out/sweep"));
}

TEST_CASE("validate reports rules and exits 0") {
  const auto dir = test::scratch_dir("cli-validate");
  std::string text = kCrash;
  text.replace(text.find("speed = 10"), 10, "speed = 10\nalpha = -1");
  std::ostringstream out, err;
  CHECK(cmd_validate(write_text(dir, "neg.cfg", text), out, err) == 0);
  CHECK(out.str().find("FAIL vehicle[ego].alpha_nonnegative") != std::string::npos);
  CHECK(out.str().find("PASS ") != std::string::npos);
  std::ostringstream out2;
  CHECK(cmd_validate(test::preset("adaptive"), out2, err) == 0);
  CHECK(out2.str().find("FAIL") == std::string::npos);
  CHECK(cmd_validate(dir / "missing.cfg", out, err) == 1);
  fs::remove_all(dir);
}

TEST_CASE("the installed binary maps errors to exit codes") {
  const std::string exe = PCBF_CLI_PATH;
  auto status = [](const std::string& cmd) {
    const int s = std::system((cmd + " >/dev/null 2>&1").c_str());
    return WIFEXITED(s) ? WEXITSTATUS(s) : -1;
  };
  CHECK(status(exe + " run fly") == 2);
  CHECK(status(exe + " run predict --trials 0") == 2);
  CHECK(status(exe + " run sweep --config /nonexistent.cfg") == 3);
  CHECK(status(exe + " validate " + test::preset("sweep").string()) == 0);
  CHECK(status(exe + " --help") == 0);
}

}  // TEST_SUITE
