#include <doctest.h>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace {

struct Result {
  int code = -1;
  std::string out;
};

Result sh(const std::string& args) {
  std::string cmd = std::string(TRIADSIM_PATH) + " " + args + " 2>&1";
  Result r;
  FILE* p = popen(cmd.c_str(), "r");
  REQUIRE(p != nullptr);
  std::array<char, 4096> buf;
  while (std::size_t n = std::fread(buf.data(), 1, buf.size(), p)) r.out.append(buf.data(), n);
  int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string cfg(const char* name) { return std::string(CONFIGS_DIR) + "/" + name; }
std::string data(const char* name) { return std::string(DATA_DIR) + "/" + name; }

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("run is deterministic") {
  auto a = sh("run --config " + cfg("default.ini") + " --scenario mix2 --ops 300");
  auto b = sh("run --config " + cfg("default.ini") + " --scenario mix2 --ops 300");
  CHECK(a.code == 0);
  CHECK(a.out == b.out);
  CHECK(a.out.find("# config") != std::string::npos);
  CHECK(a.out.find("state hash") != std::string::npos);
  auto other = sh("run --config " + cfg("default.ini") + " --scenario mix2 --ops 300 --seed 2");
  CHECK(other.out != a.out);
}

TEST_CASE("run writes its output directory") {
  auto dir = std::filesystem::temp_directory_path() / "triadsim_cli_test";
  std::filesystem::remove_all(dir);
  auto r = sh("run --config " + cfg("corrupt_counter.ini") + " --scenario pwrite --ops 200 --out " + dir.string());
  CHECK(r.code == 0);
  for (const char* f : {"report.txt", "stats.csv", "state_hash.txt", "recovery.txt", "recovery.csv"})
    CHECK(std::filesystem::exists(dir / f));
  CHECK(slurp(dir / "recovery.txt").find("partial") != std::string::npos);
  CHECK(slurp(dir / "stats.csv").rfind("workload,policy,", 0) == 0);
  std::filesystem::remove_all(dir);
}

TEST_CASE("csv format and trace files") {
  auto r = sh("run --config " + cfg("default.ini") + " --trace " + data("small.trace") + " --format csv");
  CHECK(r.code == 0);
  CHECK(r.out.rfind("workload,policy,capacity", 0) == 0);
  CHECK(r.out.find("triad:1,64MB,4:4") != std::string::npos);
}

TEST_CASE("crash at an event id") {
  auto r = sh("run --config " + cfg("default.ini") + " --trace " + data("small.trace") + " --crash-at 4");
  CHECK(r.code == 0);
  CHECK(r.out.find("outcome            verified") != std::string::npos);
  auto past = sh("run --config " + cfg("default.ini") + " --trace " + data("small.trace") + " --crash-at 100000");
  CHECK(past.code == 2);
}

TEST_CASE("crashtest exit codes") {
  auto ok = sh("crashtest --config " + cfg("default.ini") + " --scenario mix1 --ops 40");
  CHECK(ok.code == 0);
  CHECK(ok.out.find("PASS") != std::string::npos);
  auto bad = sh("crashtest --config " + cfg("attack_demo.ini") + " --scenario attack --ops 200 --crash-at random:10");
  CHECK(bad.code == 3);
  CHECK(bad.out.find("pad-reuse") != std::string::npos);
  auto jobs = sh("crashtest --config " + cfg("default.ini") + " --scenario mix1 --ops 40 --jobs 2");
  CHECK(jobs.out == ok.out);
}

TEST_CASE("model rows") {
  auto r = sh("model --capacity 1TB --tier counters");
  CHECK(r.code == 0);
  CHECK(r.out == "capacity,capacity_bytes,tier,ratio,scope,blocks,seconds\n"
                 "1TB,1099511627776,counters,8:0,all,306783384,30.678338\n");
  auto grid = sh("model --capacity 1TB,2TB --tier data,l1");
  std::size_t lines = 0;
  for (char c : grid.out) lines += c == '\n';
  CHECK(lines == 5);
  CHECK(sh("model --tier l99").code == 2);
}

TEST_CASE("errors map to exit codes") {
  auto ratio = sh("validate --config " + data("bad_ratio.ini"));
  CHECK(ratio.code == 2);
  CHECK(ratio.out.find("sum to 8") != std::string::npos);
  auto trace = sh("run --trace " + data("bad.trace"));
  CHECK(trace.code == 2);
  CHECK(trace.out.find("line 2") != std::string::npos);
  CHECK(sh("run --policy triad:9 --scenario mix1").code == 2);
  CHECK(sh("run --capacity 64MB --ratio 4:4 --scenario mix1 --fault counter@99999999:1").code == 2);
  CHECK(sh("frobnicate").code == 2);
  CHECK(sh("validate --config /nonexistent.ini").code == 2);
}

TEST_CASE("integrity violations exit with 4") {
  // Silent corruption is invisible to recovery and caught on the next read.
  auto r = sh("run --config " + cfg("default.ini") + " --trace " + data("corrupt.trace") +
              " --crash-at 60 --fault 'data@0x2000000:5!'");
  CHECK(r.code == 4);
  CHECK(r.out.find("at op 12") != std::string::npos);
}

TEST_CASE("gen round-trips through validate") {
  auto dir = std::filesystem::temp_directory_path() / "triadsim_gen_test";
  std::filesystem::create_directories(dir);
  auto trace = (dir / "g.trace").string();
  CHECK(sh("gen --region mixed --ops 100 --stride 4096 --out " + trace).code == 0);
  auto v = sh("validate --trace " + trace);
  CHECK(v.code == 0);
  CHECK(v.out.find("100 ops, 0 issues") != std::string::npos);
  auto a = sh("gen --scenario daxbench2 --ops 50"), b = sh("gen --scenario daxbench2 --ops 50");
  CHECK(a.out == b.out);
  std::filesystem::remove_all(dir);
}

TEST_CASE("sweep emits one row per cell") {
  auto r = sh("sweep --policies strict,triad:1,none --scenarios mix1,pwrite --ops 100");
  CHECK(r.code == 0);
  std::size_t lines = 0;
  for (char c : r.out) lines += c == '\n';
  CHECK(lines == 7);
}
