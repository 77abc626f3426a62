// Acceptance checks. One PASS/FAIL line per criterion; exit status 1 if any fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <string>

#include "triad/analytics.hpp"
#include "triad/crashtest.hpp"
#include "triad/simulator.hpp"

using namespace triad;

namespace {

constexpr std::uint64_t MB = 1ULL << 20;
constexpr std::uint64_t TB = 1ULL << 40;

struct Verdict {
  bool ok = true;
  std::string detail;

  void expect(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      detail += (detail.empty() ? "" : "; ") + what;
    }
  }
  void note(const std::string& what) { detail += (detail.empty() ? "" : "; ") + what; }
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

bool within(double got, double want, double rel) { return std::abs(got - want) <= rel * std::abs(want); }

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

SimConfig base(const std::string& policy, Ratio ratio = Ratio{4, 4}, std::uint64_t capacity = 64 * MB) {
  SimConfig c;
  c.capacity = capacity;
  c.ratio = ratio;
  c.policy = PersistPolicy::parse(policy);
  return c;
}

Verdict golden_model() {
  Verdict v;
  auto t0 = std::chrono::steady_clock::now();
  struct Row {
    const char* label;
    double got, want, tol;
  };
  const double d8 = analytic_recovery_time(8 * TB, kTierData), l2_8 = analytic_recovery_time(8 * TB, 2);
  const Row rows[] = {
      {"1TB counters", analytic_recovery_time(TB, kTierCounters), 30.68, 0.01},
      {"1TB L1", analytic_recovery_time(TB, 1), 3.83, 0.01},
      {"1TB L2", analytic_recovery_time(TB, 2), 0.48, 0.01},
      {"3TB counters", analytic_recovery_time(3 * TB, kTierCounters), 92.0, 0.01},
      {"3TB L1", analytic_recovery_time(3 * TB, 1), 11.5, 0.01},
      {"3TB data", analytic_recovery_time(3 * TB, kTierData), 5154.0, 0.01},
      {"64TB L2", analytic_recovery_time(64 * TB, 2), 30.6, 0.03},
      {"8TB data/L2", d8 / l2_8, 3648.0, 0.03},
      {"1TB data", analytic_recovery_time(TB, kTierData), 1800.0, 0.05},
  };
  for (const auto& r : rows) v.expect(within(r.got, r.want, r.tol), std::string(r.label) + " = " + fmt("%.4g", r.got));
  v.expect(l2_8 < 4.0, "8TB L2 = " + fmt("%.4g", l2_8));
  const double dt = seconds_since(t0);
  v.expect(dt < 1.0, "took " + fmt("%.3f s", dt));
  if (v.ok)
    v.note("1TB ctr " + fmt("%.3f", rows[0].got) + " s, 3TB data " + fmt("%.1f", rows[5].got) + " s, 8TB ratio " +
           fmt("%.0f", rows[7].got) + "x, 64TB L2 " + fmt("%.2f", rows[6].got) + " s");
  return v;
}

Verdict crash_exhaustion() {
  Verdict v;
  for (unsigned p = 0; p <= 2; ++p) {
    auto cfg = base("triad:" + std::to_string(p));
    Trace trace = scenario("mix1", cfg.region_map(), cfg.seed, 500);
    auto t0 = std::chrono::steady_clock::now();
    auto s = crash_test(cfg, trace, CrashPlan{});
    const double dt = seconds_since(t0);
    std::uint64_t checked = 0, dups = 0;
    for (const auto& r : s.results) {
      checked += r.persistent_checked;
      dups += r.pad_duplicates;
    }
    const std::string tag = "P=" + std::to_string(p);
    v.expect(s.passed(), tag + ": " + std::to_string(s.violation_count()) + " violations");
    v.expect(dups == 0, tag + ": " + std::to_string(dups) + " duplicate pads");
    v.expect(checked > 0, tag + ": no persistent writes checked");
    v.expect(dt < 300, tag + " took " + fmt("%.0f s", dt));
    if (v.ok) v.note(tag + " " + std::to_string(s.points_total) + " points " + fmt("%.1f s", dt));
  }
  return v;
}

Verdict attack_reproduction() {
  Verdict v;
  auto cfg = base("triad:1");
  // Rewrites of non-persistent blocks on both sides of every crash point.
  Trace trace;
  for (int round = 0; round < 6; ++round)
    for (std::uint64_t a : {std::uint64_t{0}, std::uint64_t{64}, std::uint64_t{4096}, 32 * MB}) trace.push_back({OpKind::Write, a, 1000ULL + round});
  auto dups = [&](bool attack) {
    SimConfig c = cfg;
    c.attack_demo = attack;
    auto s = crash_test(c, trace, CrashPlan{});
    std::uint64_t n = 0;
    for (const auto& r : s.results)
      for (const auto& x : r.violations) n += x.kind == "pad-reuse";
    return n;
  };
  const auto with = dups(true), without = dups(false);
  v.expect(with >= 1, "attack demo reported no pad reuse");
  v.expect(without == 0, "rotation still reported " + std::to_string(without));
  v.note("pad reuse at " + std::to_string(with) + " crash points with a static key, " + std::to_string(without) +
         " with rotation");
  return v;
}

Verdict oracle_equivalence() {
  Verdict v;
  for (Ratio ratio : {Ratio{4, 4}, Ratio{1, 7}}) {
    auto cfg = base("triad:1", ratio, 256 * 4096);
    Controller c(cfg);
    std::mt19937_64 rng(42);
    for (int i = 0; i < 10000; ++i) {
      std::uint64_t a = (rng() % (cfg.capacity / 64)) * 64;
      c.write(Address{a}, expand_payload(rng()));
    }
    const auto key = c.keys().tree_key();
    auto full = MerkleTree::build_full(c.geometry(), key, [&](std::uint64_t page) {
      return counter_digest(key, c.peek_counter(page).serialize());
    });
    // Independent incremental tree fed the same final digests in random order.
    MerkleTree inc = factory_tree(c.geometry(), key);
    std::vector<std::uint64_t> order(c.geometry().counter_blocks());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);
    for (auto page : order) inc.update_path(page, counter_digest(key, c.peek_counter(page).serialize()));
    v.expect(full.root() == c.devices().root, ratio.str() + ": controller root differs from full build");
    v.expect(inc.root() == full.root(), ratio.str() + ": incremental tree differs from full build");
    v.expect(inc.nodes() == full.nodes(), ratio.str() + ": node contents differ");
  }
  if (v.ok) v.note("4:4 and 1:7, 10000 writes over 256 counter blocks");
  return v;
}

Verdict write_accounting() {
  Verdict v;
  const std::size_t n = 400;
  auto cfg0 = base("strict", Ratio{8, 0});
  const unsigned levels = cfg0.geometry().levels();
  Trace trace;
  for (std::size_t i = 0; i < n; ++i) trace.push_back({OpKind::Write, (i % 256) * 4096 + (i / 256) * 64, i + 1});
  auto strict_meta = [&](const std::string& policy) {
    Simulator sim(base(policy, Ratio{8, 0}));
    sim.replay(trace);
    sim.finish();
    return sim.stats().nvm_writes.strict_metadata;
  };
  for (unsigned p = 0; p <= levels; ++p) {
    auto got = strict_meta("triad:" + std::to_string(p));
    v.expect(got == n * (1 + p), "triad:" + std::to_string(p) + " wrote " + std::to_string(got));
  }
  auto s = strict_meta("strict");
  v.expect(s == n * (1 + levels), "strict wrote " + std::to_string(s));
  auto none = strict_meta("none");
  v.expect(none == 0, "none wrote " + std::to_string(none));

  std::size_t cells = 0;
  for (const auto& name : scenario_names()) {
    std::map<std::string, std::uint64_t> meta;
    for (const char* p : {"strict", "triad:2", "triad:1", "none"}) {
      meta[p] = run_scenario(base(p), name, 500).nvm_writes.metadata();
    }
    bool ordered = meta["strict"] >= meta["triad:2"] && meta["triad:2"] >= meta["triad:1"] &&
                   meta["triad:1"] >= meta["none"];
    v.expect(ordered, name + " breaks the policy ordering");
    ++cells;
  }
  if (v.ok) v.note("N=" + std::to_string(n) + ", P=0.." + std::to_string(levels) + ", ordering on " +
                   std::to_string(cells) + " scenarios");
  return v;
}

Verdict pinpointing() {
  Verdict v;
  const std::uint64_t kP = 40 * MB;
  const std::uint64_t page = (kP + 30 * 4096) / 4096;
  auto run = [&](SimConfig cfg, Corruption fault) {
    cfg.faults.push_back(fault);
    Simulator sim(cfg);
    for (int i = 0; i < 100; ++i) sim.write(kP + 4096ULL * i, expand_payload(i + 1));
    sim.crash();
    return sim.recover();
  };
  auto single = [&](const RecoveryReport& r, std::uint64_t bytes, const std::string& tag) {
    v.expect(r.unverifiable.size() == 1, tag + ": " + std::to_string(r.unverifiable.size()) + " ranges");
    if (r.unverifiable.size() == 1)
      v.expect(r.unverifiable[0].bytes() == bytes, tag + ": " + std::to_string(r.unverifiable[0].bytes()) + " bytes");
  };
  auto cfg = base("triad:1");
  single(run(cfg, {BlockKey::counter(page), 70, true}), 4096, "counter P=1");
  single(run(cfg, {BlockKey::node(cfg.geometry().ancestor(page, 1)), 9, true}), 32 * 1024, "L1 node");
  auto r0 = run(base("triad:0"), {BlockKey::counter(page), 70, true});
  single(r0, cfg.capacity / 8, "counter P=0");
  v.expect(r0.outcome == RecoveryOutcome::Failed, "P=0 outcome " + std::string(to_string(r0.outcome)));
  if (v.ok) v.note("4KB, 32KB and capacity/8 ranges");
  return v;
}

Verdict lazy_recovery() {
  Verdict v;
  auto cfg = base("triad:1");
  Simulator sim(cfg);
  std::mt19937_64 rng(7);
  std::map<std::uint64_t, Block64> persistent, nonpersistent;
  std::uint64_t spurious = 0;
  auto op = [&] {
    std::uint64_t a = rng() % 3 ? (rng() % 256) * 4096 + (rng() % 8) * 64 : (rng() % (cfg.capacity / 64)) * 64;
    if (rng() % 2) a += 32 * MB * (rng() % 2);
    a %= cfg.capacity;
    auto& m = sim.controller().region_of(Address{a}) == Region::Persistent ? persistent : nonpersistent;
    try {
      if (rng() % 2) {
        Block64 b = expand_payload(rng());
        sim.write(a, b);
        m[a] = b;
      } else {
        auto it = m.find(a);
        Block64 want = it == m.end() ? Block64{} : it->second;
        if (sim.read(a) != want) ++spurious;
      }
    } catch (const IntegrityViolation&) {
      ++spurious;
    }
  };
  for (int i = 0; i < 4000; ++i) op();
  const auto dirty = sim.controller().devices().counter_cache.dirty_lines();
  v.expect(dirty > 0, "no dirty metadata before the crash");
  sim.crash();
  auto r = sim.recover();
  nonpersistent.clear();
  v.expect(r.outcome == RecoveryOutcome::Verified, "recovery " + std::string(to_string(r.outcome)));
  v.expect(r.np_blocks_touched == 0, std::to_string(r.np_blocks_touched) + " NP blocks touched");
  for (int i = 0; i < 10000; ++i) op();
  v.expect(spurious == 0, std::to_string(spurious) + " spurious violations");

  // Forced zero digests on a non-persistent counter.
  const std::uint64_t page = 5;
  const auto before = sim.stats().zero_mac_reencrypts;
  sim.controller().faults().force_zero_mac(page, 63);
  try {
    sim.write(page * 4096, expand_payload(1));
    v.expect(sim.read(page * 4096) == expand_payload(1), "zero-MAC page reads back wrong");
  } catch (const std::exception& e) {
    v.expect(false, std::string("zero-MAC path: ") + e.what());
  }
  const auto reenc = sim.stats().zero_mac_reencrypts - before;
  v.expect(reenc == 63, std::to_string(reenc) + " re-encryptions");
  if (v.ok)
    v.note(std::to_string(dirty) + " dirty lines at crash, 0 NP blocks touched, 10000 ops clean, zero-MAC converged after " +
           std::to_string(reenc) + " re-encryptions");
  return v;
}

Verdict determinism() {
  Verdict v;
  for (const auto& name : scenario_names()) {
    std::string out[2];
    for (auto& o : out) {
      auto cfg = base("triad:1");
      std::uint64_t hash = 0;
      auto stats = run_scenario(cfg, name, 500, &hash);
      o = emit_report(stats, ReportFormat::Text, cfg, hash, name) +
          emit_report(stats, ReportFormat::Csv, cfg, hash, name);
      Simulator sim(cfg);
      sim.replay(scenario(name, cfg.region_map(), cfg.seed, 200));
      sim.crash();
      o += sim.recover().text() + std::to_string(sim.state_hash());
    }
    v.expect(out[0] == out[1], name + " differs between runs");
  }
  if (v.ok) v.note(std::to_string(scenario_names().size()) + " scenarios, reports and hashes identical");
  return v;
}

}  // namespace

int main() {
  const std::pair<const char*, std::function<Verdict()>> criteria[] = {
      {"analytic recovery-time golden values", golden_model},
      {"crash-consistency exhaustion", crash_exhaustion},
      {"attack reproduction", attack_reproduction},
      {"oracle equivalence", oracle_equivalence},
      {"write accounting", write_accounting},
      {"pinpointing", pinpointing},
      {"lazy recovery", lazy_recovery},
      {"determinism", determinism},
  };
  int failed = 0, id = 0;
  for (const auto& [name, check] : criteria) {
    ++id;
    Verdict v;
    try {
      v = check();
    } catch (const std::exception& e) {
      v.ok = false;
      v.detail = std::string("exception: ") + e.what();
    }
    failed += !v.ok;
    std::printf("%s [%d] %s: %s\n", v.ok ? "PASS" : "FAIL", id, name, v.detail.c_str());
    std::fflush(stdout);
  }
  return failed ? 1 : 0;
}
