#include <doctest.h>

#include <cmath>
#include <sstream>

#include "triad/analytics.hpp"
#include "triad/workload.hpp"

using namespace triad;

namespace {

constexpr std::uint64_t GB = 1ULL << 30;
constexpr std::uint64_t TB = 1ULL << 40;

/// Block count written out from scratch: eight equal slots, levels until
/// one node per slot remains.
double reference_seconds(std::uint64_t capacity, int tier) {
  const std::uint64_t counters = capacity / 4096;
  const std::uint64_t per_slot = (counters + 7) / 8;
  std::vector<std::uint64_t> level{counters};
  std::uint64_t n = per_slot, span = 1;
  while (n > 1) {
    span *= 8;
    n = (per_slot + span - 1) / span;
    level.push_back(8 * n);
  }
  double blocks = tier < 0 ? static_cast<double>(capacity / 64) : static_cast<double>(level[tier]);
  for (std::size_t t = std::max(tier, 0) + 1; t < level.size(); ++t) blocks += static_cast<double>(level[t]);
  return blocks * 100e-9;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream in(s);
  for (std::string f; std::getline(in, f, sep);) out.push_back(f);
  return out;
}

}  // namespace

TEST_CASE("tier parsing") {
  CHECK(parse_tier("data") == kTierData);
  CHECK(parse_tier("counters") == kTierCounters);
  CHECK(parse_tier("L3") == 3);
  CHECK(parse_tier("l1") == 1);
  CHECK_THROWS_AS(parse_tier("L0x"), ConfigError);
  CHECK_THROWS_AS(parse_tier("roots"), ConfigError);
}

TEST_CASE("model matches an independent count") {
  for (std::uint64_t cap : {std::uint64_t{64} << 20, GB, 16 * GB, TB, 3 * TB, 8 * TB}) {
    for (int tier = -1; tier <= 3; ++tier) {
      CAPTURE(cap);
      CAPTURE(tier);
      CHECK(analytic_recovery_time(cap, tier) == doctest::Approx(reference_seconds(cap, tier)).epsilon(1e-12));
    }
  }
}

TEST_CASE("golden recovery times") {
  // Values in seconds; 0.1% tolerance.
  auto near = [](double got, double want) { return std::abs(got - want) <= 1e-3 * want; };
  CHECK(near(analytic_recovery_time(TB, kTierData), 1721.82));
  CHECK(near(analytic_recovery_time(TB, kTierCounters), 30.678));
  CHECK(near(analytic_recovery_time(TB, 1), 3.835));
  CHECK(near(analytic_recovery_time(TB, 2), 0.4794));
  CHECK(near(analytic_recovery_time(3 * TB, kTierCounters), 92.035));
  CHECK(near(analytic_recovery_time(3 * TB, 1), 11.504));
  CHECK(near(analytic_recovery_time(64 * TB, 2), 30.678));
}

TEST_CASE("each extra persisted level divides recovery time by about eight") {
  for (std::uint64_t cap = GB; cap <= 64 * TB; cap *= 4) {
    // Rounding dominates once a tier holds only a few nodes per slot.
    const int top = cap >= 64 * GB ? 3 : 2;
    for (int tier = 0; tier <= top; ++tier) {
      double ratio = analytic_recovery_time(cap, tier) / analytic_recovery_time(cap, tier + 1);
      CAPTURE(cap);
      CAPTURE(tier);
      CHECK(ratio >= 7.9);
      CHECK(ratio <= 8.1);
    }
  }
}

TEST_CASE("model edge cases") {
  CHECK(analytic_recovery_time(0, 1) == 0.0);
  CHECK(analytic_recovery_time(2 * TB, 1) == doctest::Approx(2 * analytic_recovery_time(TB, 1)).epsilon(1e-6));
  CHECK(analytic_recovery_time(TB, 1, Ratio{8, 0}, RecoveryScope::All, 200e-9) ==
        doctest::Approx(2 * analytic_recovery_time(TB, 1)));
  auto p = analytic_recovery_time(TB, 1, Ratio{2, 6}, RecoveryScope::Persistent);
  auto np = analytic_recovery_time(TB, 1, Ratio{2, 6}, RecoveryScope::NonPersistent);
  CHECK(p + np == doctest::Approx(analytic_recovery_time(TB, 1)));
  CHECK(p == doctest::Approx(analytic_recovery_time(TB, 1) / 4));
  auto geom = TreeGeometry::for_capacity(TB);
  std::array<Region, kArity> all{};
  CHECK_THROWS_AS(recovery_block_count(geom, static_cast<int>(geom.levels()) + 1, all), ConfigError);
  CHECK_THROWS_AS(recovery_block_count(geom, -2, all), ConfigError);
}

TEST_CASE("stats CSV is self-consistent") {
  SimConfig cfg;
  cfg.capacity = 64ULL << 20;
  std::uint64_t hash = 0;
  auto stats = run_scenario(cfg, "mix3", 400, &hash);
  auto csv = split(emit_report(stats, ReportFormat::Csv, cfg, hash, "mix3"), '\n');
  REQUIRE(csv.size() == 2);
  auto head = split(csv[0], ','), row = split(csv[1], ',');
  REQUIRE(head.size() == row.size());
  auto col = [&](const std::string& name) {
    for (std::size_t i = 0; i < head.size(); ++i)
      if (head[i] == name) return row[i];
    FAIL("missing column " << name);
    return std::string();
  };
  auto num = [&](const std::string& name) { return std::stoull(col(name)); };
  CHECK(num("nvm_total_writes") ==
        num("nvm_data_writes") + num("nvm_counter_writes") + num("nvm_node_writes") + num("nvm_recovery_writes"));
  std::uint64_t by_level = 0;
  for (const auto& f : split(col("node_writes_by_level"), ';')) by_level += std::stoull(f);
  CHECK(by_level == num("nvm_node_writes"));
  CHECK(num("metadata_strict_writes") + num("metadata_writeback_writes") ==
        num("nvm_counter_writes") + num("nvm_node_writes"));
  CHECK(num("ops") == 400);
  CHECK(num("reads") + num("writes") == 400);
  CHECK(col("workload") == "mix3");

  auto text = emit_report(stats, ReportFormat::Text, cfg, hash, "mix3");
  CHECK(text.rfind("# config\n", 0) == 0);
  CHECK(text.find("# run") != std::string::npos);
  CHECK(parse_format("csv") == ReportFormat::Csv);
  CHECK_THROWS_AS(parse_format("xml"), ConfigError);
}

TEST_CASE("write-through cost is 1 + P blocks per persistent write") {
  SimConfig base;
  base.capacity = 64ULL << 20;
  base.ratio = Ratio{8, 0};
  for (unsigned p = 0; p <= 3; ++p) {
    SimConfig cfg = base;
    cfg.policy = PersistPolicy::triad(p);
    auto s = run_scenario(cfg, "pwrite", 300);
    CAPTURE(p);
    REQUIRE(s.persistent_writes > 0);
    CHECK(s.nvm_writes.strict_metadata == s.persistent_writes * (1 + p));
  }
}

TEST_CASE("metadata writes are ordered by policy strength") {
  SimConfig base;
  base.capacity = 64ULL << 20;
  for (const auto& name : scenario_names()) {
    auto meta = [&](PersistPolicy p) {
      SimConfig cfg = base;
      cfg.policy = p;
      return run_scenario(cfg, name, 300).nvm_writes.metadata();
    };
    auto strict = meta(PersistPolicy::strict()), t2 = meta(PersistPolicy::triad(2)),
         t1 = meta(PersistPolicy::triad(1)), none = meta(PersistPolicy::none());
    CAPTURE(name);
    CHECK(strict >= t2);
    CHECK(t2 >= t1);
    CHECK(t1 >= none);
  }
}

TEST_CASE("sweep rows follow the nested order") {
  SweepSpec spec;
  spec.policies = {PersistPolicy::strict(), PersistPolicy::triad(1)};
  spec.capacities = {64ULL << 20, 128ULL << 20};
  spec.scenarios = {"mix1", "pwrite"};
  spec.ops = 100;
  auto one = sweep_csv(spec, 1);
  CHECK(one == sweep_csv(spec, 2));
  auto lines = split(one, '\n');
  REQUIRE(lines.size() == 9);
  CHECK(lines[1].rfind("mix1,strict,64MB,", 0) == 0);
  CHECK(lines[2].rfind("pwrite,strict,64MB,", 0) == 0);
  CHECK(lines[3].rfind("mix1,strict,128MB,", 0) == 0);
  CHECK(lines[5].rfind("mix1,triad:1,64MB,", 0) == 0);
}
