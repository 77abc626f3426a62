#pragma once

#include <cstdint>
#include <deque>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "triad/address.hpp"
#include "triad/common.hpp"
#include "triad/merkle.hpp"

namespace triad {

inline constexpr double kNvmReadNs = 60.0;
inline constexpr double kNvmWriteNs = 150.0;

enum class BlockKind : std::uint8_t { Data = 0, Counter = 1, Node = 2 };

/// Identity of one 64B NVM block. Data blocks are indexed by block address,
/// counters by page, nodes by (tier, index).
struct BlockKey {
  BlockKind kind = BlockKind::Data;
  unsigned tier = 0;
  std::uint64_t index = 0;

  static BlockKey data(std::uint64_t block) { return {BlockKind::Data, 0, block}; }
  static BlockKey counter(std::uint64_t page) { return {BlockKind::Counter, 0, page}; }
  static BlockKey node(NodeId id) { return {BlockKind::Node, id.tier, id.index}; }

  NodeId node_id() const { return {tier, index}; }
  std::uint64_t pack() const;
  static BlockKey unpack(std::uint64_t packed);
  std::string str() const;

  friend bool operator==(const BlockKey&, const BlockKey&) = default;
  friend auto operator<=>(const BlockKey&, const BlockKey&) = default;
};

struct DataBlock {
  Block64 bytes{};
  std::uint64_t mac = 0;
  friend bool operator==(const DataBlock&, const DataBlock&) = default;
};

enum class WriteCause : std::uint8_t { Data = 0, Counter = 1, Node = 2, Recovery = 3 };

struct WpqEntry {
  BlockKey key;
  Block64 payload{};
  std::uint64_t mac = 0;  // data blocks only
  bool strict = true;     // write-through (false: dirty eviction)
  friend bool operator==(const WpqEntry&, const WpqEntry&) = default;
};

/// NVM write counters by cause.
struct WriteTally {
  std::uint64_t data = 0;
  std::uint64_t counter = 0;
  std::vector<std::uint64_t> node;  // index = tier; [0] unused
  std::uint64_t recovery = 0;
  std::uint64_t strict_metadata = 0;     // counter + node write-throughs
  std::uint64_t writeback_metadata = 0;  // dirty evictions

  std::uint64_t nodes_total() const;
  std::uint64_t metadata() const { return counter + nodes_total(); }
  std::uint64_t total() const { return data + metadata() + recovery; }
};

/// Durable NVM module. Data and counters are sparse (absent = all zero);
/// tree nodes are dense.
class NvmArray {
 public:
  NvmArray() = default;
  NvmArray(const TreeGeometry& geom, NodeStore factory_nodes);

  DataBlock read_data(std::uint64_t block);
  Block64 read_counter(std::uint64_t page);
  MerkleNode read_node(NodeId id);

  /// Side-effect free accessors for recovery sweeps and checks.
  const DataBlock* peek_data(std::uint64_t block) const;
  Block64 peek_counter(std::uint64_t page) const;
  const MerkleNode& peek_node(NodeId id) const { return nodes_.at(id); }

  /// Applies a drained WPQ entry or a direct recovery write.
  void apply(const WpqEntry& e, WriteCause cause);
  void write_node(NodeId id, const MerkleNode& n, WriteCause cause);
  /// In-place access for recovery rebuilds; pair with count_recovery_write.
  NodeStore& nodes_mut() { return nodes_; }
  void count_recovery_write(BlockKey key) { count_write(key, WriteCause::Recovery, true); }

  /// Flips one bit of the stored block.
  void corrupt_bit(BlockKey key, unsigned bit);

  void reset_contents(NodeStore factory_nodes);

  std::uint64_t write_count(BlockKey key) const;
  std::uint64_t total_write_count() const { return total_writes_; }
  std::uint64_t reads() const { return reads_; }
  /// Reads and writes of data and counter blocks (including peeks used by
  /// recovery sweeps).
  std::uint64_t data_counter_touches() const { return dc_touches_; }
  void note_touch(std::uint64_t n = 1) const { dc_touches_ += n; }

  const WriteTally& tally() const { return tally_; }
  const std::unordered_map<std::uint64_t, DataBlock>& data_blocks() const { return data_; }
  const std::unordered_map<std::uint64_t, Block64>& counter_blocks() const { return counters_; }
  const NodeStore& nodes() const { return nodes_; }

  void hash_into(std::uint64_t& h) const;
  void save(std::ostream& out) const;
  void load(std::istream& in);

 private:
  void count_write(BlockKey key, WriteCause cause, bool strict);

  std::unordered_map<std::uint64_t, DataBlock> data_;
  std::unordered_map<std::uint64_t, Block64> counters_;
  NodeStore nodes_;
  std::unordered_map<std::uint64_t, std::uint64_t> writes_;
  std::uint64_t total_writes_ = 0;
  std::uint64_t reads_ = 0;
  mutable std::uint64_t dc_touches_ = 0;
  WriteTally tally_;
};

struct CacheLine {
  BlockKey key;
  Block64 value{};
  bool dirty = false;
  Region region = Region::Persistent;
  std::uint64_t stamp = 0;
};

/// Set-associative LRU cache of verified metadata blocks. Contents are
/// volatile.
class MetadataCache {
 public:
  MetadataCache(std::uint64_t capacity_bytes = 128 * 1024, unsigned ways = 8);

  /// LRU-touching lookup; counts a hit or miss.
  CacheLine* lookup(BlockKey key);
  /// No statistics, no LRU change.
  const CacheLine* peek(BlockKey key) const;
  bool contains(BlockKey key) const { return peek(key) != nullptr; }

  /// Inserts or overwrites; returns the victim if a valid line was evicted.
  std::optional<CacheLine> fill(BlockKey key, const Block64& value, bool dirty, Region region);

  void clear();

  std::uint64_t sets() const { return sets_; }
  unsigned ways() const { return ways_; }
  std::uint64_t set_of(BlockKey key) const;
  std::uint64_t hits() const { return hits_; }
  std::uint64_t misses() const { return misses_; }
  std::size_t resident() const;
  std::size_t dirty_lines() const;
  void hash_into(std::uint64_t& h) const;

 private:
  std::uint64_t sets_;
  unsigned ways_;
  std::vector<std::vector<CacheLine>> lines_;
  std::uint64_t clock_ = 0;
  std::uint64_t hits_ = 0;
  std::uint64_t misses_ = 0;
};

class WritePendingQueue;

enum class AccessIntent { Read, Write };
enum class WritePolicy { WriteBack, WriteThrough };

struct AccessResult {
  bool hit = false;
  std::optional<CacheLine> evicted_dirty;
  bool stalled = false;
};

/// One metadata access: LRU update, write-through enqueue or dirty marking,
/// dirty victims enqueued as write-backs.
AccessResult cache_access(MetadataCache& cache, BlockKey key, const Block64& value,
                          AccessIntent intent, WritePolicy policy, Region region,
                          WritePendingQueue& wpq, NvmArray& nvm);

/// Durable FIFO in front of the NVM. A full queue drains its oldest entry
/// before accepting a new one (a producer stall).
class WritePendingQueue {
 public:
  explicit WritePendingQueue(std::size_t depth = 16);

  /// Returns true when the enqueue stalled.
  bool enqueue(const WpqEntry& e, NvmArray& nvm);
  std::size_t drain(NvmArray& nvm);
  /// Newest pending entry for `key`.
  const WpqEntry* lookup(BlockKey key) const;

  std::size_t size() const { return q_.size(); }
  std::size_t depth() const { return depth_; }
  bool empty() const { return q_.empty(); }
  const std::deque<WpqEntry>& entries() const { return q_; }
  std::uint64_t stalls() const { return stalls_; }
  std::uint64_t drained() const { return drained_; }

  void hash_into(std::uint64_t& h) const;
  void save(std::ostream& out) const;
  void load(std::istream& in);

 private:
  std::size_t depth_;
  std::deque<WpqEntry> q_;
  std::uint64_t stalls_ = 0;
  std::uint64_t drained_ = 0;
};

/// Write record logged to the persistent registers before any copy to the
/// WPQ starts.
struct WriteRecord {
  std::vector<WpqEntry> entries;  // data, counter, nodes (level order)
  RootRegister root;
  friend bool operator==(const WriteRecord&, const WriteRecord&) = default;
};

class PersistentRegisters {
 public:
  bool ready() const { return ready_; }
  const WriteRecord& record() const { return record_; }
  void log(WriteRecord rec);
  void clear_ready() { ready_ = false; }

  /// Registers needed for a single-block record: data, counter, P nodes, root.
  static unsigned slot_count(unsigned persisted_levels) { return 2 + persisted_levels + 1; }

  /// Optional pinned copies of the top two tree tiers.
  std::map<std::uint64_t, MerkleNode>& pinned() { return pinned_; }
  const std::map<std::uint64_t, MerkleNode>& pinned() const { return pinned_; }

  void hash_into(std::uint64_t& h) const;
  void save(std::ostream& out) const;
  void load(std::istream& in);

 private:
  bool ready_ = false;
  WriteRecord record_;
  std::map<std::uint64_t, MerkleNode> pinned_;  // key: BlockKey::pack
};

struct Corruption {
  BlockKey key;
  unsigned bit = 0;
  bool flagged = true;  // reported uncorrectable by ECC
};

/// Deterministic fault list applied to the NVM contents.
class FaultInjector {
 public:
  void add(Corruption c) { faults_.push_back(c); }
  /// Forces the next `count` digests of `counter` to read as zero.
  void force_zero_mac(std::uint64_t counter, unsigned count) { zero_mac_[counter] += count; }
  /// Consumes one forced zero for `counter`, if any.
  bool take_zero_mac(std::uint64_t counter);

  /// Applies every pending corruption; flagged blocks are remembered until
  /// the next recovery consumes them.
  void apply(NvmArray& nvm);
  const std::set<BlockKey>& flagged() const { return flagged_; }
  void clear_flagged() { flagged_.clear(); }
  const std::vector<Corruption>& pending() const { return faults_; }
  bool has_zero_mac(std::uint64_t counter) const;

 private:
  std::vector<Corruption> faults_;
  std::set<BlockKey> flagged_;
  std::map<std::uint64_t, unsigned> zero_mac_;
};

/// Everything the controller touches. Durable: NVM, WPQ, registers, root.
/// Volatile: the two metadata caches.
struct DeviceState {
  NvmArray nvm;
  WritePendingQueue wpq;
  PersistentRegisters regs;
  RootRegister root;
  MetadataCache counter_cache;
  MetadataCache mt_cache;

  /// Power loss: erases exactly the volatile parts.
  void crash();
  std::uint64_t durable_hash() const;
  std::uint64_t full_hash() const;

  /// Binary snapshot of the durable parts.
  void save(std::ostream& out) const;
  void load(std::istream& in);
};

/// Incremental FNV-1a used for state hashes.
void hash_bytes(std::uint64_t& h, const void* data, std::size_t len);
void hash_u64(std::uint64_t& h, std::uint64_t v);
inline constexpr std::uint64_t kHashSeed = 0xcbf29ce484222325ULL;

}  // namespace triad
