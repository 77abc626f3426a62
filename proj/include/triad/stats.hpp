#pragma once

#include <cstdint>
#include <string>
#include <unordered_set>
#include <vector>

#include "triad/counters.hpp"
#include "triad/devices.hpp"

namespace triad {

/// One issued pad: key material plus the IV it was generated from.
struct PadRecord {
  std::uint64_t key_id = 0;
  std::uint64_t key_material = 0;
  IV iv;
  friend bool operator==(const PadRecord& a, const PadRecord& b) {
    return a.key_material == b.key_material && a.iv == b.iv;
  }
};

struct PadRecordHash {
  std::size_t operator()(const PadRecord& r) const;
};

/// Every pad that ever left the chip. Duplicates are kept, never dropped.
class PadLedger {
 public:
  /// Returns false when the (key, IV) pair was already issued.
  bool insert(const PadRecord& r);

  std::size_t size() const { return seen_.size(); }
  std::uint64_t inserts() const { return inserts_; }
  std::uint64_t duplicate_count() const { return dup_count_; }
  /// First duplicates, capped to keep reports small.
  const std::vector<PadRecord>& duplicates() const { return dups_; }

 private:
  std::unordered_set<PadRecord, PadRecordHash> seen_;
  std::vector<PadRecord> dups_;
  std::uint64_t inserts_ = 0;
  std::uint64_t dup_count_ = 0;
};

struct RunStats {
  std::uint64_t ops = 0;
  std::uint64_t reads = 0;
  std::uint64_t writes = 0;
  std::uint64_t persistent_writes = 0;
  std::uint64_t nonpersistent_writes = 0;

  WriteTally nvm_writes;  // snapshot of the NVM tally
  std::uint64_t nvm_reads = 0;
  std::uint64_t counter_fetches = 0;
  std::uint64_t node_fetches = 0;
  std::uint64_t data_fetches = 0;

  std::uint64_t counter_cache_hits = 0;
  std::uint64_t counter_cache_misses = 0;
  std::uint64_t mt_cache_hits = 0;
  std::uint64_t mt_cache_misses = 0;

  std::uint64_t wpq_enqueues = 0;
  std::uint64_t wpq_stalls = 0;
  double latency_ns = 0;

  std::uint64_t page_reencryptions = 0;
  std::uint64_t zero_mac_reencrypts = 0;
  std::uint64_t rekey_events = 0;
  std::uint64_t lazy_counter_inits = 0;

  std::uint64_t pads_issued = 0;
  std::uint64_t pad_duplicates = 0;
  std::uint64_t crashes = 0;
  std::uint64_t recoveries = 0;
  std::uint64_t events = 0;
};

}  // namespace triad
