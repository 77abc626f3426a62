#include "triad/crashtest.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <map>
#include <random>
#include <sstream>
#include <thread>

namespace triad {

std::vector<CrashPoint> crash_point_enumerate(const SimConfig& cfg, const Trace& trace) {
  return CrashTester(cfg, trace).points();
}

CrashPlan CrashPlan::parse(std::string_view text) {
  CrashPlan p;
  auto number = [&](std::string_view s) {
    std::uint64_t v = 0;
    auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || r.ec != std::errc{} || r.ptr != s.data() + s.size())
      throw ConfigError("bad crash plan '" + std::string(text) + "' (exhaustive, random:N or an event id)");
    return v;
  };
  if (text == "exhaustive") return p;
  if (text.substr(0, 7) == "random:") {
    p.mode = Mode::Random;
    p.value = number(text.substr(7));
    if (p.value == 0) throw ConfigError("random crash plan needs N >= 1");
    return p;
  }
  p.mode = Mode::Single;
  p.value = number(text);
  return p;
}

std::string CrashPlan::str() const {
  switch (mode) {
    case Mode::Exhaustive: return "exhaustive";
    case Mode::Random: return "random:" + std::to_string(value);
    case Mode::Single: return std::to_string(value);
  }
  return "?";
}

std::vector<std::uint64_t> CrashPlan::select(std::uint64_t point_count, std::uint64_t seed) const {
  std::vector<std::uint64_t> all(point_count);
  for (std::uint64_t i = 0; i < point_count; ++i) all[i] = i;
  if (mode == Mode::Exhaustive) return all;
  if (mode == Mode::Single) {
    if (value >= point_count)
      throw ConfigError("crash point " + std::to_string(value) + " out of range (trace has " +
                        std::to_string(point_count) + " points)");
    return {value};
  }
  if (value >= point_count) return all;
  std::vector<std::uint64_t> out;
  std::mt19937_64 rng(seed);
  std::sample(all.begin(), all.end(), std::back_inserter(out), value, rng);
  return out;
}

std::uint64_t CrashTestSummary::violation_count() const {
  std::uint64_t n = 0;
  for (const auto& r : results) n += r.violations.size();
  return n;
}

std::string CrashTestSummary::text() const {
  std::ostringstream o;
  std::map<std::string, std::uint64_t> by_kind;
  std::uint64_t work = 0, checked = 0;
  for (const auto& r : results) {
    work += r.simulated_work;
    checked += r.persistent_checked;
    for (const auto& v : r.violations) ++by_kind[v.kind];
  }
  o << "crashtest policy=" << policy << " points=" << points_total << " run=" << results.size()
    << " persistent_checks=" << checked << " recovery_work=" << work << " violations=" << violation_count()
    << "\n";
  for (const auto& [k, n] : by_kind) o << "  " << k << ": " << n << "\n";
  std::size_t shown = 0;
  for (const auto& r : results)
    for (const auto& v : r.violations) {
      if (shown++ == 50) o << "  ...\n";
      if (shown > 50) continue;
      o << "  point " << v.point << " (op " << r.point.op_index << ", "
        << (r.point.kind ? std::string(to_string(*r.point.kind)) : std::string("initial")) << "): " << v.kind
        << ": " << v.detail << "\n";
    }
  o << (passed() ? "PASS" : "FAIL") << "\n";
  return o.str();
}

namespace {

void apply_op(Controller& c, const TraceOp& op) {
  if (op.kind == OpKind::Read)
    c.read(Address{op.addr});
  else
    c.write(Address{op.addr}, op.payload());
}

std::uint64_t aligned(std::uint64_t a) { return a - a % kBlockSize; }

}  // namespace

CrashTester::CrashTester(const SimConfig& cfg, const Trace& trace) : cfg_(cfg), trace_(trace) {
  cfg_.validate();
  auto issues = validate_trace(trace_, cfg_.region_map());
  if (!issues.empty())
    throw ConfigError("trace op " + std::to_string(issues.front().position) + ": " + issues.front().message);

  Controller c(cfg_);
  std::size_t current = 0;
  points_.push_back(CrashPoint{0, 0, std::nullopt});
  c.set_event_hook([&](const Event& e) { points_.push_back(CrashPoint{e.seq, current, e.kind}); });
  for (std::size_t i = 0; i < trace_.size(); ++i) {
    if (i % kSnapshotEvery == 0) {
      Controller snap = c;
      snap.set_event_hook({});
      snapshots_.push_back(std::move(snap));
    }
    events_before_.push_back(c.event_count());
    current = i;
    apply_op(c, trace_[i]);
  }
  if (snapshots_.empty()) snapshots_.push_back(Controller(cfg_));
}

CrashPointResult CrashTester::run(std::uint64_t point_id) const {
  const CrashPoint& cp = points_.at(point_id);
  CrashPointResult res;
  res.point = cp;
  auto violate = [&](std::string kind, std::string detail) {
    res.violations.push_back(CrashViolation{cp.id, std::move(kind), std::move(detail)});
  };

  const std::size_t base = cp.initial() ? 0 : (cp.op_index / kSnapshotEvery) * kSnapshotEvery;
  Controller c = snapshots_.at(base / kSnapshotEvery);
  std::map<std::uint64_t, Block64> persistent;  // acknowledged, by block address
  std::map<std::uint64_t, Block64> volatile_after;
  auto track = [&](const TraceOp& op, std::map<std::uint64_t, Block64>* np) {
    if (op.kind != OpKind::Write) return;
    if (c.region_of(Address{op.addr}) == Region::Persistent)
      persistent[aligned(op.addr)] = op.payload();
    else if (np)
      (*np)[aligned(op.addr)] = op.payload();
  };
  for (std::size_t i = 0; i < base; ++i) track(trace_[i], nullptr);

  std::size_t resume = 0;
  if (!cp.initial()) {
    for (std::size_t i = base; i < cp.op_index; ++i) {
      apply_op(c, trace_[i]);
      track(trace_[i], nullptr);
    }
    const std::uint64_t target = cp.id - events_before_.at(cp.op_index);
    std::uint64_t seen = 0;
    c.set_event_hook([&](const Event&) {
      if (++seen == target) throw CrashInjected(cp.id);
    });
    bool crashed = false;
    try {
      apply_op(c, trace_[cp.op_index]);
    } catch (const CrashInjected&) {
      crashed = true;
    }
    c.set_event_hook({});
    if (!crashed) throw ContractViolation("crash point " + std::to_string(cp.id) + " was not reached");
    res.in_flight_committed = c.in_flight_committed();
    if (res.in_flight_committed) track(trace_[cp.op_index], nullptr);
    resume = cp.op_index + 1;
  }

  c.crash();
  c.faults().apply(c.devices().nvm);
  RecoveryReport rep = recover(c);
  res.outcome = rep.outcome;
  res.simulated_work = rep.simulated_work;
  if (rep.outcome != RecoveryOutcome::Verified)
    violate("recovery-failed", std::string(to_string(rep.outcome)) + " with " +
                                   std::to_string(rep.unverifiable.size()) + " unverifiable ranges");

  auto check = [&](const std::map<std::uint64_t, Block64>& want, const char* when) {
    for (const auto& [a, v] : want) {
      ++res.persistent_checked;
      try {
        if (c.read(Address{a}) != v) violate("lost-write", hex64(a) + " differs " + when);
      } catch (const IntegrityViolation& e) {
        violate("integrity", hex64(a) + " " + when + ": " + e.what());
      }
    }
  };
  check(persistent, "after recovery");

  bool clean = true;
  for (std::size_t i = resume; i < trace_.size(); ++i) {
    const auto& op = trace_[i];
    try {
      if (op.kind == OpKind::Read) {
        Block64 got = c.read(Address{op.addr});
        auto a = aligned(op.addr);
        auto it = persistent.find(a);
        auto jt = volatile_after.find(a);
        if ((it != persistent.end() && it->second != got) || (jt != volatile_after.end() && jt->second != got))
          violate("lost-write", hex64(a) + " read back wrong at op " + std::to_string(i));
      } else {
        c.write(Address{op.addr}, op.payload());
        track(op, &volatile_after);
      }
    } catch (const IntegrityViolation& e) {
      violate("spurious-integrity", "op " + std::to_string(i) + ": " + e.what());
      clean = false;
      break;
    }
  }
  if (clean) {
    check(persistent, "at end of trace");
    for (const auto& [a, v] : volatile_after) {
      try {
        if (c.read(Address{a}) != v) violate("lost-write", hex64(a) + " (non-persistent) differs at end of trace");
      } catch (const IntegrityViolation& e) {
        violate("spurious-integrity", hex64(a) + " at end of trace: " + e.what());
      }
    }
  }

  res.pad_duplicates = c.ledger().duplicate_count();
  if (res.pad_duplicates) {
    const auto& d = c.ledger().duplicates().front();
    violate("pad-reuse", std::to_string(res.pad_duplicates) + " repeated pads, first: key " +
                             std::to_string(d.key_id) + " page " + std::to_string(d.iv.page_id) + " block " +
                             std::to_string(d.iv.page_offset) + " counter (" + std::to_string(d.iv.major) + "," +
                             std::to_string(d.iv.minor) + ")");
  }
  return res;
}

CrashTestSummary CrashTester::run_plan(const CrashPlan& plan, unsigned jobs) const {
  CrashTestSummary s;
  s.policy = cfg_.policy.str();
  s.points_total = points_.size();
  const auto ids = plan.select(points_.size(), cfg_.seed);
  s.results.resize(ids.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k; (k = next.fetch_add(1)) < ids.size();) {
      try {
        s.results[k] = run(ids[k]);
      } catch (const std::exception& e) {
        s.results[k].point = points_.at(ids[k]);
        s.results[k].violations.push_back(CrashViolation{ids[k], "error", e.what()});
      }
    }
  };
  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(std::max<std::size_t>(ids.size(), 1))));
  std::vector<std::thread> pool;
  for (unsigned j = 1; j < jobs; ++j) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return s;
}

CrashPointResult run_crash_point(const SimConfig& cfg, const Trace& trace, std::uint64_t point_id) {
  return CrashTester(cfg, trace).run(point_id);
}

CrashTestSummary crash_test(const SimConfig& cfg, const Trace& trace, const CrashPlan& plan, unsigned jobs) {
  return CrashTester(cfg, trace).run_plan(plan, jobs);
}

}  // namespace triad
