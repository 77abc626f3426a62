#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <utility>
#include <vector>

#include "triad/address.hpp"
#include "triad/common.hpp"

namespace triad {

/// Position of a counter block (tier 0) or tree node (tier >= 1).
struct NodeId {
  unsigned tier = 0;
  std::uint64_t index = 0;

  friend bool operator==(NodeId, NodeId) = default;
  friend auto operator<=>(NodeId, NodeId) = default;
};

/// Shape of the 8-ary tree over counter blocks.
///
/// The on-chip root register has 8 slots; slot j covers the counter blocks
/// [j*S, (j+1)*S) with S = ceil(C/8). Each slot owns an 8-ary subtree built
/// bottom-up over its counters, so every root slot covers an exact eighth of
/// memory. `levels()` counts the NVM-resident hash tiers; the root register
/// sits on top of them as tier levels()+1.
///
/// Node indices are global per tier: a slot's nodes at tier t occupy
/// [slot*stride(t), slot*stride(t)+count(t, slot)).
class TreeGeometry {
 public:
  explicit TreeGeometry(std::uint64_t counter_blocks);
  static TreeGeometry for_capacity(std::uint64_t capacity_bytes);

  std::uint64_t counter_blocks() const { return counters_; }
  std::uint64_t capacity() const { return counters_ * kPageSize; }
  std::uint64_t slot_span() const { return span_; }
  std::uint64_t slot_bytes() const { return span_ * kPageSize; }
  unsigned active_slots() const { return active_; }
  unsigned levels() const { return levels_; }
  /// Tiers including counters and the root register.
  unsigned tiers() const { return levels_ + 2; }
  unsigned root_tier() const { return levels_ + 1; }

  std::uint64_t stride(unsigned tier) const;
  std::uint64_t count(unsigned tier, unsigned slot) const;
  /// Size of the tier's index space (all slots).
  std::uint64_t nodes_at(unsigned tier) const;
  std::vector<std::uint64_t> nodes_per_level() const;

  unsigned slot_of(NodeId id) const;
  bool valid(NodeId id) const;
  /// Parent node, or nullopt when the parent is the root register.
  std::optional<NodeId> parent(NodeId id) const;
  unsigned position_in_parent(NodeId id) const;
  unsigned child_count(NodeId id) const;
  NodeId child(NodeId id, unsigned j) const;
  NodeId ancestor(std::uint64_t counter, unsigned tier) const;
  unsigned root_slot_of_counter(std::uint64_t counter) const;
  /// Counter blocks covered by `id`, as [first, last).
  std::pair<std::uint64_t, std::uint64_t> counter_range(NodeId id) const;
  /// Data bytes covered by `id`, as [start, end).
  std::pair<std::uint64_t, std::uint64_t> byte_range(NodeId id) const;

 private:
  std::uint64_t counters_;
  std::uint64_t span_;
  unsigned active_;
  unsigned levels_;
  std::vector<std::uint64_t> pow8_;
};

/// 64B tree node: eight 8B child digests.
struct MerkleNode {
  std::array<std::uint64_t, kArity> slots{};

  Block64 serialize() const;
  static MerkleNode deserialize(const Block64& bytes);
  bool all_zero() const;
  friend bool operator==(const MerkleNode&, const MerkleNode&) = default;
};

/// The on-chip root: eight digests, one per root slot. Lives in the
/// processor's persistent domain and is never written to NVM.
struct RootRegister {
  std::array<std::uint64_t, kArity> slots{};
  friend bool operator==(const RootRegister&, const RootRegister&) = default;
};

std::uint64_t node_digest(std::uint64_t tree_key, const MerkleNode& node);

/// Dense storage for tiers 1..levels.
class NodeStore {
 public:
  NodeStore() = default;
  explicit NodeStore(const TreeGeometry& geom);

  MerkleNode& at(NodeId id) { return tiers_.at(id.tier - 1).at(id.index); }
  const MerkleNode& at(NodeId id) const { return tiers_.at(id.tier - 1).at(id.index); }
  std::size_t tier_size(unsigned tier) const { return tiers_.at(tier - 1).size(); }
  unsigned levels() const { return static_cast<unsigned>(tiers_.size()); }

  friend bool operator==(const NodeStore&, const NodeStore&) = default;

 private:
  std::vector<std::vector<MerkleNode>> tiers_;
};

using CounterDigestFn = std::function<std::uint64_t(std::uint64_t counter_index)>;

/// Recomputes tiers from_tier+1 .. levels of one root slot's subtree in
/// `store`, reading tier `from_tier` (counters through `counter_digest_of`
/// when from_tier is 0). Returns the digest destined for the root slot.
/// `work` receives one unit per block read at from_tier plus one per node
/// computed.
std::uint64_t rebuild_slot(const TreeGeometry& geom, std::uint64_t tree_key, NodeStore& store,
                           unsigned slot, unsigned from_tier,
                           const CounterDigestFn& counter_digest_of, std::uint64_t* work);

/// Digest of tier-`tier` item `index` as seen from its parent.
std::uint64_t item_digest(std::uint64_t tree_key, const NodeStore& store, NodeId id,
                          const CounterDigestFn& counter_digest_of);

struct PathUpdate {
  std::vector<NodeId> dirtied;  // level 1 first
  unsigned root_slot = 0;
};

struct VerifyOutcome {
  bool verified = true;
  unsigned mismatch_tier = 0;  // tier whose slot disagreed; levels+1 = root
  std::uint64_t mismatch_index = 0;
  unsigned nodes_checked = 0;  // stored nodes whose slot was consulted
};

struct Partition {
  std::vector<NodeId> persistent;
  std::vector<NodeId> nonpersistent;
  std::array<Region, kArity> root_slots{};
};

/// Complete tree with storage and root; the reference the controller's
/// cached, incremental view is checked against.
class MerkleTree {
 public:
  MerkleTree(const TreeGeometry& geom, std::uint64_t tree_key);

  /// Bottom-up build from every counter digest.
  static MerkleTree build_full(const TreeGeometry& geom, std::uint64_t tree_key,
                               const CounterDigestFn& counter_digest_of);

  /// Sets the counter's level-1 slot and recomputes every ancestor.
  PathUpdate update_path(std::uint64_t counter_index, std::uint64_t counter_digest);

  /// Checks a fetched counter upward until a trusted node or the root.
  VerifyOutcome verify_path(std::uint64_t counter_index, std::uint64_t counter_digest,
                            const std::function<bool(NodeId)>& trusted = {}) const;

  Partition partition(const RegionMap& map) const;

  const TreeGeometry& geometry() const { return geom_; }
  const NodeStore& nodes() const { return store_; }
  NodeStore& nodes() { return store_; }
  const RootRegister& root() const { return root_; }
  RootRegister& root() { return root_; }
  std::uint64_t tree_key() const { return key_; }

  /// Binary dump: root register then tiers levels..1, each node 64B LE.
  void dump(std::ostream& out) const;
  static MerkleTree load(std::istream& in, const TreeGeometry& geom, std::uint64_t tree_key);

 private:
  TreeGeometry geom_;
  std::uint64_t key_;
  NodeStore store_;
  RootRegister root_;
};

/// Tree of a memory whose counters were never written.
MerkleTree factory_tree(const TreeGeometry& geom, std::uint64_t tree_key);

}  // namespace triad
