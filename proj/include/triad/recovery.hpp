#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "triad/controller.hpp"

namespace triad {

enum class RecoveryOutcome { Verified, Partial, Failed };

std::string_view to_string(RecoveryOutcome o);

/// Tier naming shared with the analytic model: -1 data, 0 counters, t >= 1
/// tree level t.
std::string tier_name(int tier);

struct UnverifiableRange {
  std::uint64_t start = 0;
  std::uint64_t end = 0;  // exclusive
  std::string cause;
  std::uint64_t bytes() const { return end - start; }
  friend bool operator==(const UnverifiableRange&, const UnverifiableRange&) = default;
};

struct RecoveryReport {
  RecoveryOutcome outcome = RecoveryOutcome::Verified;
  std::string policy;
  std::size_t wpq_drained = 0;
  bool record_replayed = false;
  /// Tiers recomputed for the persistent subtree, inclusive.
  std::optional<std::pair<int, int>> rebuilt;
  std::vector<UnverifiableRange> unverifiable;
  std::uint64_t simulated_work = 0;  // blocks read or hashed by reconstruction
  std::uint64_t pinpoint_work = 0;
  std::uint64_t lazy_init_work = 0;     // non-persistent subtree reset
  std::uint64_t np_blocks_touched = 0;  // NP counter/data blocks read or written by the reset
  std::uint64_t recovery_writes = 0;
  std::uint64_t volatile_epoch = 0;
  double t_block = 100e-9;

  double wall_model_seconds() const { return static_cast<double>(simulated_work) * t_block; }

  std::string text() const;
  static std::string csv_header();
  std::string csv_row() const;
};

/// Post-crash recovery: drain the WPQ, replay a READY record, rebuild the
/// persistent subtree from its lowest durable tier, pinpoint on mismatch,
/// lazily reset the non-persistent subtree and rotate the volatile key.
RecoveryReport recover(Controller& c);

/// Zeroes the non-persistent level-1 nodes and recomputes everything above
/// them. Returns the work in blocks; `touched` receives the number of NP
/// counter/data blocks accessed (always 0).
std::uint64_t lazy_recover_nonpersistent(Controller& c, std::uint64_t* touched = nullptr);

struct PinpointResult {
  std::vector<UnverifiableRange> ranges;
  int trusted_tier = -1;  // lowest tier whose recomputation matched the root
  bool used_pinned = false;
  bool failed = false;  // whole root slot unverifiable
};

/// Locates corruption inside one persistent root slot by descending the
/// durable tiers. `persisted_top` is the highest durable tier.
PinpointResult pinpoint(Controller& c, unsigned slot, int persisted_top, const std::set<BlockKey>& flagged,
                        std::uint64_t* work);

}  // namespace triad
