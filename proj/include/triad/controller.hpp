#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <vector>

#include "triad/config.hpp"
#include "triad/counters.hpp"
#include "triad/crypto.hpp"
#include "triad/devices.hpp"
#include "triad/merkle.hpp"
#include "triad/policy.hpp"
#include "triad/stats.hpp"

namespace triad {

/// Boundaries at which a crash may be injected.
enum class EventKind { RegisterLog, Enqueue, CacheUpdate, ReadyClear };

std::string_view to_string(EventKind k);

struct Event {
  EventKind kind;
  std::uint64_t op = 0;   // controller operation sequence number
  std::uint64_t seq = 0;  // 1-based event number
};

using EventHook = std::function<void(const Event&)>;

/// Thrown from an event hook to stop the controller at an event boundary.
class CrashInjected : public std::exception {
 public:
  explicit CrashInjected(std::uint64_t event) : event_(event) {}
  const char* what() const noexcept override { return "crash injected"; }
  std::uint64_t event() const { return event_; }

 private:
  std::uint64_t event_;
};

/// The secure memory controller: verified reads, the logged write path and
/// policy-driven persistence of counters and tree nodes.
class Controller {
 public:
  explicit Controller(const SimConfig& cfg);

  void write(Address addr, const Block64& plaintext);
  Block64 read(Address addr);
  Key select_key(Address addr) const;
  Region region_of(Address addr) const { return map_.region_of(addr); }

  /// Copies the strict entries of a logged record into the WPQ in record
  /// order, then clears READY.
  void flush_record(const WriteRecord& rec);

  /// End of run: drains the WPQ.
  void finish();
  /// Power loss.
  void crash();

  void set_event_hook(EventHook hook) { hook_ = std::move(hook); }
  std::uint64_t event_count() const { return events_; }
  /// True once the current operation's record reached the registers.
  bool in_flight_committed() const { return committed_; }

  const SimConfig& config() const { return cfg_; }
  const TreeGeometry& geometry() const { return geom_; }
  const RegionMap& regions() const { return map_; }
  const PersistPolicy& policy() const { return cfg_.policy; }
  const std::array<Region, kArity>& slot_classes() const { return slot_class_; }
  Region node_region(NodeId id) const { return slot_class_[geom_.slot_of(id)]; }

  DeviceState& devices() { return dev_; }
  const DeviceState& devices() const { return dev_; }
  KeySet& keys() { return keys_; }
  const KeySet& keys() const { return keys_; }
  PadLedger& ledger() { return ledger_; }
  const PadLedger& ledger() const { return ledger_; }
  FaultInjector& faults() { return faults_; }

  const NodeStore& factory_nodes() const { return factory_nodes_; }
  const RootRegister& factory_root() const { return factory_root_; }

  RunStats stats() const;
  RunStats& counters() { return stats_; }

  /// Current counter block as the controller would see it (cache, WPQ or
  /// NVM), without verification or statistics.
  SplitCounterBlock peek_counter(std::uint64_t page) const;

  /// Recomputes the pinned top-tier registers from the NVM image.
  void refresh_pinned();
  void emit(EventKind kind);

 private:
  struct Path {
    std::vector<Block64> vals;  // [0] counter, [t] node at tier t
    std::vector<bool> fetched;
    unsigned top = 0;
  };

  BlockKey path_key(std::uint64_t page, unsigned tier) const;
  MetadataCache& cache_for(unsigned tier) { return tier == 0 ? dev_.counter_cache : dev_.mt_cache; }
  Path load_path(std::uint64_t page, bool need_all, std::uint64_t addr);
  Block64 fetch(BlockKey key);
  DataBlock fetch_data(std::uint64_t block);
  Block64 decrypt_checked(Address addr, const SplitCounterBlock& ctr, const DataBlock& d);
  void fill_line(unsigned tier, BlockKey key, const Block64& value, bool dirty, Region region);
  void enqueue(const WpqEntry& e);

  SimConfig cfg_;
  TreeGeometry geom_;
  RegionMap map_;
  std::array<Region, kArity> slot_class_{};
  KeySet keys_;
  NodeStore factory_nodes_;
  RootRegister factory_root_;
  DeviceState dev_;
  PadLedger ledger_;
  FaultInjector faults_;
  RunStats stats_;
  EventHook hook_;
  std::uint64_t events_ = 0;
  std::uint64_t op_seq_ = 0;
  bool committed_ = false;
};

}  // namespace triad
