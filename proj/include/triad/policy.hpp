#pragma once

#include <string>
#include <string_view>

#include "triad/address.hpp"
#include "triad/merkle.hpp"

namespace triad {

enum class PolicyMode { Strict, Triad, NoPersist };

/// Which metadata tiers are written through before a write is acknowledged.
///
/// Strict: counters and every tree level, both regions.
/// Triad(P): persistent-region counters and persistent-subtree levels 1..P;
///           everything else write-back.
/// NoPersist: only data is written through.
struct PersistPolicy {
  PolicyMode mode = PolicyMode::Triad;
  unsigned level = 1;  // P, meaningful for Triad only
  bool pin_top = false;

  static PersistPolicy strict() { return {PolicyMode::Strict, 0, false}; }
  static PersistPolicy triad(unsigned p) { return {PolicyMode::Triad, p, false}; }
  static PersistPolicy none() { return {PolicyMode::NoPersist, 0, false}; }

  /// "strict", "triad:P" (or "triadP"), "none".
  static PersistPolicy parse(std::string_view text);
  std::string str() const;

  /// Rejects P above the tree's NVM levels.
  void validate(const TreeGeometry& geom) const;

  bool counter_strict(Region r) const;
  bool node_strict(unsigned tier, Region r) const;
  /// Highest tier of the persistent subtree guaranteed durable in NVM
  /// (0 = counters); -1 when nothing is.
  int persisted_top(const TreeGeometry& geom) const;

  friend bool operator==(const PersistPolicy&, const PersistPolicy&) = default;
};

}  // namespace triad
