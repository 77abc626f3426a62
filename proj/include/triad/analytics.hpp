#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "triad/address.hpp"
#include "triad/config.hpp"
#include "triad/merkle.hpp"
#include "triad/stats.hpp"

namespace triad {

/// Lowest reconstruction tier: -1 data, 0 counters, l >= 1 tree level l.
inline constexpr int kTierData = -1;
inline constexpr int kTierCounters = 0;

/// "data", "counters", "l1", "L2", ...
int parse_tier(std::string_view text);

enum class RecoveryScope { All, Persistent, NonPersistent };

/// Blocks read or hashed when reconstructing from `lowest_tier` up to the
/// top NVM level, over the root slots in `scope`. The data tier sweeps
/// every data block (re-initialising its counter inline) and then hashes
/// levels 1..top.
std::uint64_t recovery_block_count(const TreeGeometry& geom, int lowest_tier,
                                   const std::array<Region, kArity>& slot_classes,
                                   RecoveryScope scope = RecoveryScope::All);

/// Closed-form recovery time in seconds. Capacity 0 gives 0.
double analytic_recovery_time(std::uint64_t capacity, int lowest_tier, Ratio ratio = Ratio{8, 0},
                              RecoveryScope scope = RecoveryScope::All, double t_block = 100e-9);

enum class ReportFormat { Text, Csv };
ReportFormat parse_format(std::string_view text);

/// Stats for one run. Text includes the config echo; CSV has one header
/// line and one row with a fixed column order.
std::string emit_report(const RunStats& stats, ReportFormat format, const SimConfig& cfg,
                        std::uint64_t state_hash, std::string_view workload = "");
std::string stats_csv_header();
std::string stats_csv_row(const RunStats& stats, const SimConfig& cfg, std::uint64_t state_hash,
                          std::string_view workload);

struct SweepSpec {
  std::vector<PersistPolicy> policies;
  std::vector<std::uint64_t> capacities;
  std::vector<std::string> scenarios;
  SimConfig base;
  std::size_t ops = 500;
};

/// One row per (policy, capacity, scenario); rows in that nested order
/// regardless of `jobs`.
std::string sweep_csv(const SweepSpec& spec, unsigned jobs = 1);

/// Runs one scenario to completion (WPQ drained) and returns its stats.
RunStats run_scenario(const SimConfig& cfg, const std::string& scenario_name, std::size_t ops,
                      std::uint64_t* state_hash = nullptr);

}  // namespace triad
