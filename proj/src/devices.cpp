#include "triad/devices.hpp"

#include <algorithm>
#include <istream>
#include <ostream>

namespace triad {

void hash_bytes(std::uint64_t& h, const void* data, std::size_t len) {
  auto p = static_cast<const std::uint8_t*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
}

void hash_u64(std::uint64_t& h, std::uint64_t v) {
  std::uint8_t b[8];
  store_le64(b, v);
  hash_bytes(h, b, 8);
}

namespace {

void put_u64(std::ostream& out, std::uint64_t v) {
  std::uint8_t b[8];
  store_le64(b, v);
  out.write(reinterpret_cast<const char*>(b), 8);
}

std::uint64_t get_u64(std::istream& in) {
  std::uint8_t b[8];
  if (!in.read(reinterpret_cast<char*>(b), 8)) throw ConfigError("snapshot truncated");
  return load_le64(b);
}

void put_block(std::ostream& out, const Block64& b) {
  out.write(reinterpret_cast<const char*>(b.data()), b.size());
}

Block64 get_block(std::istream& in) {
  Block64 b{};
  if (!in.read(reinterpret_cast<char*>(b.data()), b.size())) throw ConfigError("snapshot truncated");
  return b;
}

void expect_tag(std::istream& in, std::uint64_t tag, const char* what) {
  if (get_u64(in) != tag) throw ConfigError(std::string("snapshot: bad ") + what + " section tag");
}

constexpr std::uint64_t kTagNvm = 0x4d564e5f50414e53ULL;   // "SNAP_NVM"
constexpr std::uint64_t kTagWpq = 0x5150575f50414e53ULL;   // "SNAP_WPQ"
constexpr std::uint64_t kTagRegs = 0x4745525f50414e53ULL;  // "SNAP_REG"
constexpr std::uint64_t kTagRoot = 0x544f525f50414e53ULL;  // "SNAP_ROT"

void hash_entry(std::uint64_t& h, const WpqEntry& e) {
  hash_u64(h, e.key.pack());
  hash_bytes(h, e.payload.data(), e.payload.size());
  hash_u64(h, e.mac);
  hash_u64(h, e.strict);
}

void save_entry(std::ostream& out, const WpqEntry& e) {
  put_u64(out, e.key.pack());
  put_block(out, e.payload);
  put_u64(out, e.mac);
  put_u64(out, e.strict);
}

WpqEntry load_entry(std::istream& in) {
  WpqEntry e;
  e.key = BlockKey::unpack(get_u64(in));
  e.payload = get_block(in);
  e.mac = get_u64(in);
  e.strict = get_u64(in) != 0;
  return e;
}

}  // namespace

std::uint64_t BlockKey::pack() const {
  return (static_cast<std::uint64_t>(kind) << 62) | (static_cast<std::uint64_t>(tier & 0x3f) << 56) |
         (index & ((1ULL << 56) - 1));
}

BlockKey BlockKey::unpack(std::uint64_t packed) {
  return {static_cast<BlockKind>(packed >> 62), static_cast<unsigned>((packed >> 56) & 0x3f),
          packed & ((1ULL << 56) - 1)};
}

std::string BlockKey::str() const {
  switch (kind) {
    case BlockKind::Data: return "data[" + std::to_string(index) + "]";
    case BlockKind::Counter: return "counter[" + std::to_string(index) + "]";
    case BlockKind::Node: break;
  }
  return "L" + std::to_string(tier) + "[" + std::to_string(index) + "]";
}

std::uint64_t WriteTally::nodes_total() const {
  std::uint64_t s = 0;
  for (auto v : node) s += v;
  return s;
}

NvmArray::NvmArray(const TreeGeometry& geom, NodeStore factory_nodes) : nodes_(std::move(factory_nodes)) {
  tally_.node.assign(geom.levels() + 1, 0);
}

void NvmArray::reset_contents(NodeStore factory_nodes) {
  data_.clear();
  counters_.clear();
  nodes_ = std::move(factory_nodes);
}

DataBlock NvmArray::read_data(std::uint64_t block) {
  ++reads_;
  ++dc_touches_;
  auto it = data_.find(block);
  return it == data_.end() ? DataBlock{} : it->second;
}

Block64 NvmArray::read_counter(std::uint64_t page) {
  ++reads_;
  ++dc_touches_;
  auto it = counters_.find(page);
  return it == counters_.end() ? Block64{} : it->second;
}

MerkleNode NvmArray::read_node(NodeId id) {
  ++reads_;
  return nodes_.at(id);
}

const DataBlock* NvmArray::peek_data(std::uint64_t block) const {
  auto it = data_.find(block);
  return it == data_.end() ? nullptr : &it->second;
}

Block64 NvmArray::peek_counter(std::uint64_t page) const {
  auto it = counters_.find(page);
  return it == counters_.end() ? Block64{} : it->second;
}

void NvmArray::count_write(BlockKey key, WriteCause cause, bool strict) {
  ++writes_[key.pack()];
  ++total_writes_;
  if (cause == WriteCause::Recovery) {
    ++tally_.recovery;
    return;
  }
  switch (key.kind) {
    case BlockKind::Data: ++tally_.data; return;
    case BlockKind::Counter: ++tally_.counter; break;
    case BlockKind::Node:
      if (tally_.node.size() <= key.tier) tally_.node.resize(key.tier + 1, 0);
      ++tally_.node[key.tier];
      break;
  }
  if (strict)
    ++tally_.strict_metadata;
  else
    ++tally_.writeback_metadata;
}

void NvmArray::apply(const WpqEntry& e, WriteCause cause) {
  switch (e.key.kind) {
    case BlockKind::Data:
      data_[e.key.index] = DataBlock{e.payload, e.mac};
      ++dc_touches_;
      break;
    case BlockKind::Counter:
      counters_[e.key.index] = e.payload;
      ++dc_touches_;
      break;
    case BlockKind::Node: nodes_.at(e.key.node_id()) = MerkleNode::deserialize(e.payload); break;
  }
  count_write(e.key, cause, e.strict);
}

void NvmArray::write_node(NodeId id, const MerkleNode& n, WriteCause cause) {
  nodes_.at(id) = n;
  count_write(BlockKey::node(id), cause, true);
}

void NvmArray::corrupt_bit(BlockKey key, unsigned bit) {
  if (bit >= 8 * kBlockSize) throw ContractViolation("bit index " + std::to_string(bit) + " out of range");
  auto flip = [bit](Block64& b) { b[bit / 8] ^= static_cast<std::uint8_t>(1u << (bit % 8)); };
  switch (key.kind) {
    case BlockKind::Data: flip(data_[key.index].bytes); break;
    case BlockKind::Counter: flip(counters_[key.index]); break;
    case BlockKind::Node: {
      auto bytes = nodes_.at(key.node_id()).serialize();
      flip(bytes);
      nodes_.at(key.node_id()) = MerkleNode::deserialize(bytes);
      break;
    }
  }
}

std::uint64_t NvmArray::write_count(BlockKey key) const {
  auto it = writes_.find(key.pack());
  return it == writes_.end() ? 0 : it->second;
}

void NvmArray::hash_into(std::uint64_t& h) const {
  std::vector<std::uint64_t> keys;
  keys.reserve(data_.size());
  for (const auto& [k, v] : data_) keys.push_back(k);
  std::sort(keys.begin(), keys.end());
  for (auto k : keys) {
    const auto& d = data_.at(k);
    hash_u64(h, k);
    hash_bytes(h, d.bytes.data(), d.bytes.size());
    hash_u64(h, d.mac);
  }
  keys.clear();
  for (const auto& [k, v] : counters_) keys.push_back(k);
  std::sort(keys.begin(), keys.end());
  for (auto k : keys) {
    hash_u64(h, k);
    hash_bytes(h, counters_.at(k).data(), kBlockSize);
  }
  for (unsigned t = 1; t <= nodes_.levels(); ++t)
    for (std::uint64_t i = 0; i < nodes_.tier_size(t); ++i)
      for (auto s : nodes_.at({t, i}).slots) hash_u64(h, s);
}

void NvmArray::save(std::ostream& out) const {
  put_u64(out, kTagNvm);
  std::vector<std::uint64_t> keys;
  for (const auto& [k, v] : data_) keys.push_back(k);
  std::sort(keys.begin(), keys.end());
  put_u64(out, keys.size());
  for (auto k : keys) {
    put_u64(out, k);
    put_block(out, data_.at(k).bytes);
    put_u64(out, data_.at(k).mac);
  }
  keys.clear();
  for (const auto& [k, v] : counters_) keys.push_back(k);
  std::sort(keys.begin(), keys.end());
  put_u64(out, keys.size());
  for (auto k : keys) {
    put_u64(out, k);
    put_block(out, counters_.at(k));
  }
  put_u64(out, nodes_.levels());
  for (unsigned t = 1; t <= nodes_.levels(); ++t) {
    put_u64(out, nodes_.tier_size(t));
    for (std::uint64_t i = 0; i < nodes_.tier_size(t); ++i) put_block(out, nodes_.at({t, i}).serialize());
  }
}

void NvmArray::load(std::istream& in) {
  expect_tag(in, kTagNvm, "NVM");
  data_.clear();
  counters_.clear();
  for (std::uint64_t n = get_u64(in); n > 0; --n) {
    auto k = get_u64(in);
    DataBlock d;
    d.bytes = get_block(in);
    d.mac = get_u64(in);
    data_[k] = d;
  }
  for (std::uint64_t n = get_u64(in); n > 0; --n) {
    auto k = get_u64(in);
    counters_[k] = get_block(in);
  }
  auto levels = get_u64(in);
  if (levels != nodes_.levels()) throw ConfigError("snapshot tree depth does not match the configuration");
  for (unsigned t = 1; t <= levels; ++t) {
    if (get_u64(in) != nodes_.tier_size(t)) throw ConfigError("snapshot tier size mismatch");
    for (std::uint64_t i = 0; i < nodes_.tier_size(t); ++i)
      nodes_.at({t, i}) = MerkleNode::deserialize(get_block(in));
  }
}

MetadataCache::MetadataCache(std::uint64_t capacity_bytes, unsigned ways) : ways_(ways) {
  if (ways == 0 || capacity_bytes < kBlockSize * ways || capacity_bytes % (kBlockSize * ways) != 0)
    throw ConfigError("cache of " + std::to_string(capacity_bytes) + " bytes cannot be " +
                      std::to_string(ways) + "-way with 64B lines");
  sets_ = capacity_bytes / kBlockSize / ways;
  lines_.resize(sets_);
}

std::uint64_t MetadataCache::set_of(BlockKey key) const {
  // Tiers are offset so the first nodes of each level do not share a set.
  return (key.index + static_cast<std::uint64_t>(key.tier) * 37) % sets_;
}

CacheLine* MetadataCache::lookup(BlockKey key) {
  for (auto& line : lines_[set_of(key)]) {
    if (line.key == key) {
      ++hits_;
      line.stamp = ++clock_;
      return &line;
    }
  }
  ++misses_;
  return nullptr;
}

const CacheLine* MetadataCache::peek(BlockKey key) const {
  for (const auto& line : lines_[set_of(key)])
    if (line.key == key) return &line;
  return nullptr;
}

std::optional<CacheLine> MetadataCache::fill(BlockKey key, const Block64& value, bool dirty,
                                             Region region) {
  auto& set = lines_[set_of(key)];
  for (auto& line : set) {
    if (line.key == key) {
      line.value = value;
      line.dirty = line.dirty || dirty;
      line.region = region;
      line.stamp = ++clock_;
      return std::nullopt;
    }
  }
  CacheLine fresh{key, value, dirty, region, ++clock_};
  if (set.size() < ways_) {
    set.push_back(fresh);
    return std::nullopt;
  }
  auto victim = std::min_element(set.begin(), set.end(),
                                 [](const CacheLine& a, const CacheLine& b) { return a.stamp < b.stamp; });
  CacheLine old = *victim;
  *victim = fresh;
  return old;
}

void MetadataCache::clear() {
  for (auto& set : lines_) set.clear();
}

std::size_t MetadataCache::resident() const {
  std::size_t n = 0;
  for (const auto& set : lines_) n += set.size();
  return n;
}

std::size_t MetadataCache::dirty_lines() const {
  std::size_t n = 0;
  for (const auto& set : lines_)
    for (const auto& line : set) n += line.dirty;
  return n;
}

void MetadataCache::hash_into(std::uint64_t& h) const {
  for (const auto& set : lines_) {
    std::vector<const CacheLine*> sorted;
    for (const auto& line : set) sorted.push_back(&line);
    std::sort(sorted.begin(), sorted.end(),
              [](const CacheLine* a, const CacheLine* b) { return a->key < b->key; });
    for (const auto* line : sorted) {
      hash_u64(h, line->key.pack());
      hash_bytes(h, line->value.data(), line->value.size());
      hash_u64(h, line->dirty);
    }
  }
}

AccessResult cache_access(MetadataCache& cache, BlockKey key, const Block64& value,
                          AccessIntent intent, WritePolicy policy, Region region,
                          WritePendingQueue& wpq, NvmArray& nvm) {
  AccessResult r;
  r.hit = cache.lookup(key) != nullptr;
  bool write = intent == AccessIntent::Write;
  bool dirty = write && policy == WritePolicy::WriteBack;
  std::optional<CacheLine> victim;
  if (r.hit && !write) {
    // Read hit: nothing to install.
  } else {
    victim = cache.fill(key, value, dirty, region);
  }
  if (victim && victim->dirty) {
    WpqEntry wb{victim->key, victim->value, 0, false};
    r.stalled = wpq.enqueue(wb, nvm) || r.stalled;
    r.evicted_dirty = victim;
  }
  if (write && policy == WritePolicy::WriteThrough) r.stalled = wpq.enqueue({key, value, 0, true}, nvm) || r.stalled;
  return r;
}

WritePendingQueue::WritePendingQueue(std::size_t depth) : depth_(depth) {
  if (depth == 0) throw ConfigError("WPQ depth must be at least 1");
}

namespace {

WriteCause cause_of(BlockKind kind) {
  switch (kind) {
    case BlockKind::Data: return WriteCause::Data;
    case BlockKind::Counter: return WriteCause::Counter;
    case BlockKind::Node: break;
  }
  return WriteCause::Node;
}

}  // namespace

bool WritePendingQueue::enqueue(const WpqEntry& e, NvmArray& nvm) {
  bool stalled = false;
  if (q_.size() >= depth_) {
    nvm.apply(q_.front(), cause_of(q_.front().key.kind));
    q_.pop_front();
    ++drained_;
    ++stalls_;
    stalled = true;
  }
  q_.push_back(e);
  return stalled;
}

std::size_t WritePendingQueue::drain(NvmArray& nvm) {
  std::size_t n = q_.size();
  for (const auto& e : q_) nvm.apply(e, cause_of(e.key.kind));
  q_.clear();
  drained_ += n;
  return n;
}

const WpqEntry* WritePendingQueue::lookup(BlockKey key) const {
  for (auto it = q_.rbegin(); it != q_.rend(); ++it)
    if (it->key == key) return &*it;
  return nullptr;
}

void WritePendingQueue::hash_into(std::uint64_t& h) const {
  hash_u64(h, q_.size());
  for (const auto& e : q_) hash_entry(h, e);
}

void WritePendingQueue::save(std::ostream& out) const {
  put_u64(out, kTagWpq);
  put_u64(out, depth_);
  put_u64(out, q_.size());
  for (const auto& e : q_) save_entry(out, e);
}

void WritePendingQueue::load(std::istream& in) {
  expect_tag(in, kTagWpq, "WPQ");
  depth_ = get_u64(in);
  q_.clear();
  for (std::uint64_t n = get_u64(in); n > 0; --n) q_.push_back(load_entry(in));
}

void PersistentRegisters::log(WriteRecord rec) {
  record_ = std::move(rec);
  ready_ = true;
}

void PersistentRegisters::hash_into(std::uint64_t& h) const {
  hash_u64(h, ready_);
  hash_u64(h, record_.entries.size());
  for (const auto& e : record_.entries) hash_entry(h, e);
  for (auto s : record_.root.slots) hash_u64(h, s);
  for (const auto& [k, n] : pinned_) {
    hash_u64(h, k);
    for (auto s : n.slots) hash_u64(h, s);
  }
}

void PersistentRegisters::save(std::ostream& out) const {
  put_u64(out, kTagRegs);
  put_u64(out, ready_);
  put_u64(out, record_.entries.size());
  for (const auto& e : record_.entries) save_entry(out, e);
  for (auto s : record_.root.slots) put_u64(out, s);
  put_u64(out, pinned_.size());
  for (const auto& [k, n] : pinned_) {
    put_u64(out, k);
    put_block(out, n.serialize());
  }
}

void PersistentRegisters::load(std::istream& in) {
  expect_tag(in, kTagRegs, "register");
  ready_ = get_u64(in) != 0;
  record_.entries.clear();
  for (std::uint64_t n = get_u64(in); n > 0; --n) record_.entries.push_back(load_entry(in));
  for (auto& s : record_.root.slots) s = get_u64(in);
  pinned_.clear();
  for (std::uint64_t n = get_u64(in); n > 0; --n) {
    auto k = get_u64(in);
    pinned_[k] = MerkleNode::deserialize(get_block(in));
  }
}

bool FaultInjector::take_zero_mac(std::uint64_t counter) {
  auto it = zero_mac_.find(counter);
  if (it == zero_mac_.end() || it->second == 0) return false;
  if (--it->second == 0) zero_mac_.erase(it);
  return true;
}

bool FaultInjector::has_zero_mac(std::uint64_t counter) const { return zero_mac_.count(counter) != 0; }

void FaultInjector::apply(NvmArray& nvm) {
  for (const auto& c : faults_) {
    nvm.corrupt_bit(c.key, c.bit);
    if (c.flagged) flagged_.insert(c.key);
  }
  faults_.clear();
}

void DeviceState::crash() {
  counter_cache.clear();
  mt_cache.clear();
}

std::uint64_t DeviceState::durable_hash() const {
  std::uint64_t h = kHashSeed;
  nvm.hash_into(h);
  wpq.hash_into(h);
  regs.hash_into(h);
  for (auto s : root.slots) hash_u64(h, s);
  return h;
}

std::uint64_t DeviceState::full_hash() const {
  std::uint64_t h = durable_hash();
  counter_cache.hash_into(h);
  mt_cache.hash_into(h);
  return h;
}

void DeviceState::save(std::ostream& out) const {
  nvm.save(out);
  wpq.save(out);
  regs.save(out);
  put_u64(out, kTagRoot);
  for (auto s : root.slots) put_u64(out, s);
}

void DeviceState::load(std::istream& in) {
  nvm.load(in);
  wpq.load(in);
  regs.load(in);
  expect_tag(in, kTagRoot, "root");
  for (auto& s : root.slots) s = get_u64(in);
  crash();
}

}  // namespace triad
