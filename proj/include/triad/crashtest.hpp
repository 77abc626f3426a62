#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "triad/config.hpp"
#include "triad/controller.hpp"
#include "triad/recovery.hpp"
#include "triad/workload.hpp"

namespace triad {

/// Crash point `id`: power fails right after the id-th controller event.
/// Point 0 is the initial state, before the first op.
struct CrashPoint {
  std::uint64_t id = 0;
  std::size_t op_index = 0;  // op in flight (trace.size() for point 0 of an empty trace)
  std::optional<EventKind> kind;
  bool initial() const { return id == 0; }
};

/// Instrumented run of the whole trace; one point per event plus point 0.
std::vector<CrashPoint> crash_point_enumerate(const SimConfig& cfg, const Trace& trace);

struct CrashViolation {
  std::uint64_t point = 0;
  std::string kind;  // lost-write, integrity, spurious-integrity, pad-reuse, recovery-failed
  std::string detail;
};

struct CrashPointResult {
  CrashPoint point;
  RecoveryOutcome outcome = RecoveryOutcome::Verified;
  bool in_flight_committed = false;
  std::uint64_t persistent_checked = 0;
  std::uint64_t simulated_work = 0;
  std::uint64_t pad_duplicates = 0;
  std::vector<CrashViolation> violations;
};

/// `exhaustive`, `random:N` or a single point id.
struct CrashPlan {
  enum class Mode { Exhaustive, Random, Single } mode = Mode::Exhaustive;
  std::uint64_t value = 0;

  static CrashPlan parse(std::string_view text);
  std::string str() const;
  /// Point ids to run, ascending.
  std::vector<std::uint64_t> select(std::uint64_t point_count, std::uint64_t seed) const;
};

struct CrashTestSummary {
  std::string policy;
  std::uint64_t points_total = 0;
  std::vector<CrashPointResult> results;  // ordered by point id

  std::uint64_t violation_count() const;
  bool passed() const { return violation_count() == 0; }
  std::string text() const;
};

/// Replays the trace up to each selected crash point, crashes, recovers and
/// checks: acknowledged persistent writes read back verified, the rest of
/// the trace runs without integrity errors, and no pad was issued twice.
class CrashTester {
 public:
  CrashTester(const SimConfig& cfg, const Trace& trace);

  const std::vector<CrashPoint>& points() const { return points_; }
  CrashPointResult run(std::uint64_t point_id) const;
  CrashTestSummary run_plan(const CrashPlan& plan, unsigned jobs = 1) const;

 private:
  static constexpr std::size_t kSnapshotEvery = 16;

  SimConfig cfg_;
  Trace trace_;
  std::vector<CrashPoint> points_;
  std::vector<std::uint64_t> events_before_;  // events emitted before op i
  std::vector<Controller> snapshots_;         // state before op k*kSnapshotEvery
};

CrashPointResult run_crash_point(const SimConfig& cfg, const Trace& trace, std::uint64_t point_id);
CrashTestSummary crash_test(const SimConfig& cfg, const Trace& trace, const CrashPlan& plan, unsigned jobs = 1);

}  // namespace triad
