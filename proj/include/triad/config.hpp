#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "triad/address.hpp"
#include "triad/devices.hpp"
#include "triad/policy.hpp"

namespace triad {

/// Full simulation configuration. Loaded from a key=value file with
/// [sections]; command-line flags override file values.
struct SimConfig {
  std::uint64_t capacity = 64ULL << 20;
  Ratio ratio{4, 4};
  std::optional<std::uint64_t> persistent_start;
  PersistPolicy policy = PersistPolicy::triad(1);

  std::uint64_t counter_cache_bytes = 128 * 1024;
  std::uint64_t mt_cache_bytes = 128 * 1024;
  unsigned cache_ways = 8;
  std::size_t wpq_depth = 16;

  std::uint64_t seed = 1;
  double t_block = 100e-9;
  /// Disables volatile-key rotation on recovery.
  bool attack_demo = false;

  std::vector<Corruption> faults;
  std::vector<std::pair<std::uint64_t, unsigned>> zero_macs;  // counter, count

  RegionMap region_map() const;
  TreeGeometry geometry() const { return TreeGeometry::for_capacity(capacity); }

  /// Throws ConfigError with a precise message on the first problem.
  void validate() const;

  /// Canonical key=value text; parse(echo()) round-trips.
  std::string echo() const;

  static SimConfig parse(std::string_view text);
  static SimConfig load_file(const std::string& path);
};

/// "counter@17:5", "data@0x1000:3", "node2@5:0"; an optional trailing "!"
/// marks the corruption as not flagged by ECC.
Corruption parse_corruption(std::string_view text);
std::string format_corruption(const Corruption& c);

}  // namespace triad
