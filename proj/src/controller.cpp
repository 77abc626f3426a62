#include "triad/controller.hpp"

namespace triad {

std::string_view to_string(EventKind k) {
  switch (k) {
    case EventKind::RegisterLog: return "register-log";
    case EventKind::Enqueue: return "enqueue";
    case EventKind::CacheUpdate: return "cache-update";
    case EventKind::ReadyClear: return "ready-clear";
  }
  return "?";
}

namespace {

constexpr unsigned kZeroMacCap = 64;

const SimConfig& validated(const SimConfig& cfg) {
  cfg.validate();
  return cfg;
}

}  // namespace

Controller::Controller(const SimConfig& cfg)
    : cfg_(validated(cfg)),
      geom_(cfg.geometry()),
      map_(cfg.region_map()),
      keys_(cfg.seed),
      dev_{NvmArray(), WritePendingQueue(cfg.wpq_depth), PersistentRegisters(), RootRegister(),
           MetadataCache(cfg.counter_cache_bytes, cfg.cache_ways),
           MetadataCache(cfg.mt_cache_bytes, cfg.cache_ways)} {
  auto tree = factory_tree(geom_, keys_.tree_key());
  factory_nodes_ = tree.nodes();
  factory_root_ = tree.root();
  dev_.nvm = NvmArray(geom_, factory_nodes_);
  dev_.root = factory_root_;
  for (unsigned s = 0; s < kArity; ++s) slot_class_[s] = map_.slot_region(s, geom_.slot_bytes());
  for (const auto& f : cfg_.faults) faults_.add(f);
  for (const auto& [ci, n] : cfg_.zero_macs) faults_.force_zero_mac(ci, n);
  refresh_pinned();
}

Key Controller::select_key(Address addr) const {
  return map_.region_of(addr) == Region::Persistent ? keys_.persistent_key() : keys_.volatile_key();
}

void Controller::emit(EventKind kind) {
  ++events_;
  if (hook_) hook_(Event{kind, op_seq_, events_});
}

BlockKey Controller::path_key(std::uint64_t page, unsigned tier) const {
  if (tier == 0) return BlockKey::counter(page);
  return BlockKey::node(geom_.ancestor(page, tier));
}

Block64 Controller::fetch(BlockKey key) {
  if (key.kind == BlockKind::Counter)
    ++stats_.counter_fetches;
  else
    ++stats_.node_fetches;
  if (const auto* e = dev_.wpq.lookup(key)) return e->payload;
  if (key.kind == BlockKind::Counter) return dev_.nvm.read_counter(key.index);
  return dev_.nvm.read_node(key.node_id()).serialize();
}

DataBlock Controller::fetch_data(std::uint64_t block) {
  ++stats_.data_fetches;
  if (const auto* e = dev_.wpq.lookup(BlockKey::data(block))) return DataBlock{e->payload, e->mac};
  return dev_.nvm.read_data(block);
}

Block64 Controller::decrypt_checked(Address addr, const SplitCounterBlock& ctr, const DataBlock& d) {
  IV iv = iv_for(addr, ctr);
  Key key = select_key(addr);
  if (data_mac(key, iv, d.bytes) != d.mac)
    throw IntegrityViolation(IntegrityViolation::Kind::DataMac, 0, addr.block_index(), addr.byte_offset);
  return decrypt_block(d.bytes, key, iv);
}

void Controller::enqueue(const WpqEntry& e) {
  dev_.wpq.enqueue(e, dev_.nvm);
  ++stats_.wpq_enqueues;
  emit(EventKind::Enqueue);
}

void Controller::fill_line(unsigned tier, BlockKey key, const Block64& value, bool dirty, Region region) {
  auto victim = cache_for(tier).fill(key, value, dirty, region);
  if (victim && victim->dirty) enqueue(WpqEntry{victim->key, victim->value, 0, false});
}

Controller::Path Controller::load_path(std::uint64_t page, bool need_all, std::uint64_t addr) {
  const unsigned H = geom_.levels();
  Path p;
  p.vals.resize(H + 1);
  p.fetched.assign(H + 1, false);
  std::vector<bool> have(H + 1, false);
  p.top = H;
  for (unsigned t = 0; t <= H; ++t) {
    if (auto* line = cache_for(t).lookup(path_key(page, t))) {
      p.vals[t] = line->value;
      have[t] = true;
      if (!need_all) {
        p.top = t;
        break;
      }
    }
  }

  // Verify top-down: every fetched item is checked against a parent that is
  // either cached (trusted) or was itself just verified.
  const unsigned slot = geom_.root_slot_of_counter(page);
  for (int t = static_cast<int>(p.top); t >= 0; --t) {
    if (have[t]) continue;
    const unsigned tier = static_cast<unsigned>(t);
    Block64 v = fetch(path_key(page, tier));
    std::uint64_t expected;
    std::uint64_t parent_index;
    if (tier == H) {
      expected = dev_.root.slots[slot];
      parent_index = slot;
    } else {
      NodeId child = tier == 0 ? NodeId{0, page} : geom_.ancestor(page, tier);
      expected = MerkleNode::deserialize(p.vals[tier + 1]).slots[geom_.position_in_parent(child)];
      parent_index = geom_.ancestor(page, tier + 1).index;
    }
    if (tier == 0) {
      if (expected == 0) {
        // Parent slot never set since (re)initialisation: a fresh counter.
        if (!is_zero(v)) ++stats_.lazy_counter_inits;
        v = Block64{};
      } else if (counter_digest(keys_.tree_key(), v) != expected) {
        throw IntegrityViolation(IntegrityViolation::Kind::Tree, 1, parent_index, addr);
      }
    } else if (node_digest(keys_.tree_key(), MerkleNode::deserialize(v)) != expected) {
      throw IntegrityViolation(IntegrityViolation::Kind::Tree, tier + 1, parent_index, addr);
    }
    p.vals[tier] = v;
    p.fetched[tier] = true;
  }
  return p;
}

void Controller::write(Address addr, const Block64& plaintext) {
  map_.check(addr);
  addr = addr.block_aligned();
  ++op_seq_;
  committed_ = false;
  const unsigned H = geom_.levels();
  const std::uint64_t page = addr.page_index();
  const unsigned off = addr.block_in_page();
  const unsigned slot = geom_.root_slot_of_counter(page);
  const Region region = slot_class_[slot];
  const Key key = select_key(addr);

  Path path = load_path(page, true, addr.byte_offset);
  SplitCounterBlock ctr = SplitCounterBlock::deserialize(path.vals[0]);

  std::map<std::uint64_t, DataBlock> out;  // block index -> new ciphertext
  std::uint64_t digest = 0;
  for (unsigned iter = 0;; ++iter) {
    const SplitCounterBlock before = ctr;
    auto bumped = ctr.bump(off);
    if (bumped.rekey) ++stats_.rekey_events;
    if (bumped.overflowed) {
      ++stats_.page_reencryptions;
      for (unsigned j = 0; j < kBlocksPerPage; ++j) {
        if (j == off) continue;
        Address a = Address::of_block(page * kBlocksPerPage + j);
        Block64 plain{};
        auto it = out.find(a.block_index());
        if (it != out.end())
          plain = decrypt_block(it->second.bytes, key, iv_for(a, before));
        else if (!before.block_unwritten(j))
          plain = decrypt_checked(a, before, fetch_data(a.block_index()));
        IV iv = iv_for(a, ctr);
        Block64 c = encrypt_block(plain, key, iv);
        out[a.block_index()] = DataBlock{c, data_mac(key, iv, c)};
      }
    }
    digest = counter_digest(keys_.tree_key(), ctr.serialize());
    if (faults_.take_zero_mac(page)) digest = 0;
    if (digest != 0) break;
    // A zero digest would read as "uninitialised"; bump again and
    // re-encrypt the line under the new minor.
    ++stats_.zero_mac_reencrypts;
    if (iter + 1 >= kZeroMacCap)
      throw DiagnosticError("zero-MAC re-encryption of counter block " + std::to_string(page) +
                            " did not converge within " + std::to_string(kZeroMacCap) + " bumps");
  }
  {
    IV iv = iv_for(addr, ctr);
    Block64 c = encrypt_block(plaintext, key, iv);
    out[addr.block_index()] = DataBlock{c, data_mac(key, iv, c)};
  }

  std::vector<Block64> next(H + 1);
  next[0] = ctr.serialize();
  std::uint64_t child = digest;
  NodeId child_id{0, page};
  for (unsigned t = 1; t <= H; ++t) {
    NodeId id = geom_.ancestor(page, t);
    MerkleNode n = MerkleNode::deserialize(path.vals[t]);
    n.slots[geom_.position_in_parent(child_id)] = child;
    next[t] = n.serialize();
    child = node_digest(keys_.tree_key(), n);
    child_id = id;
  }
  RootRegister new_root = dev_.root;
  new_root.slots[slot] = child;

  const auto& pol = cfg_.policy;
  WriteRecord rec;
  rec.root = new_root;
  for (const auto& [b, d] : out) rec.entries.push_back(WpqEntry{BlockKey::data(b), d.bytes, d.mac, true});
  if (pol.counter_strict(region)) rec.entries.push_back(WpqEntry{BlockKey::counter(page), next[0], 0, true});
  for (unsigned t = 1; t <= H; ++t)
    if (pol.node_strict(t, region)) rec.entries.push_back(WpqEntry{path_key(page, t), next[t], 0, true});

  // Commit point: the record is durable and the root register moves.
  dev_.regs.log(rec);
  dev_.root = new_root;
  if (pol.pin_top)
    for (unsigned t = H; t >= 1 && t + 1 >= H; --t)
      dev_.regs.pinned()[path_key(page, t).pack()] = MerkleNode::deserialize(next[t]);
  for (const auto& [b, d] : out) {
    Address a = Address::of_block(b);
    ledger_.insert(PadRecord{key.id, key.material, iv_for(a, ctr)});
  }
  committed_ = true;
  ++stats_.ops;
  ++stats_.writes;
  if (region == Region::Persistent)
    ++stats_.persistent_writes;
  else
    ++stats_.nonpersistent_writes;
  emit(EventKind::RegisterLog);

  fill_line(0, BlockKey::counter(page), next[0], !pol.counter_strict(region), region);
  for (unsigned t = 1; t <= H; ++t) fill_line(t, path_key(page, t), next[t], !pol.node_strict(t, region), region);
  emit(EventKind::CacheUpdate);

  flush_record(rec);
}

void Controller::flush_record(const WriteRecord& rec) {
  if (!dev_.regs.ready()) throw ContractViolation("flush_record requires a logged record (READY_BIT set)");
  for (const auto& e : rec.entries) enqueue(e);
  dev_.regs.clear_ready();
  emit(EventKind::ReadyClear);
}

Block64 Controller::read(Address addr) {
  map_.check(addr);
  addr = addr.block_aligned();
  ++op_seq_;
  committed_ = false;
  const std::uint64_t page = addr.page_index();
  const Region region = slot_class_[geom_.root_slot_of_counter(page)];
  Path p = load_path(page, false, addr.byte_offset);
  for (unsigned t = 0; t <= p.top; ++t)
    if (p.fetched[t]) fill_line(t, path_key(page, t), p.vals[t], false, region);
  ++stats_.ops;
  ++stats_.reads;
  SplitCounterBlock ctr = SplitCounterBlock::deserialize(p.vals[0]);
  if (ctr.block_unwritten(addr.block_in_page())) return Block64{};
  return decrypt_checked(addr, ctr, fetch_data(addr.block_index()));
}

void Controller::finish() { dev_.wpq.drain(dev_.nvm); }

void Controller::crash() {
  dev_.crash();
  ++stats_.crashes;
}

SplitCounterBlock Controller::peek_counter(std::uint64_t page) const {
  if (const auto* line = dev_.counter_cache.peek(BlockKey::counter(page)))
    return SplitCounterBlock::deserialize(line->value);
  if (const auto* e = dev_.wpq.lookup(BlockKey::counter(page))) return SplitCounterBlock::deserialize(e->payload);
  return SplitCounterBlock::deserialize(dev_.nvm.peek_counter(page));
}

void Controller::refresh_pinned() {
  if (!cfg_.policy.pin_top) return;
  auto& pinned = dev_.regs.pinned();
  pinned.clear();
  const unsigned H = geom_.levels();
  for (unsigned t = H; t >= 1 && t + 1 >= H; --t)
    for (std::uint64_t i = 0; i < geom_.nodes_at(t); ++i)
      pinned[BlockKey::node({t, i}).pack()] = dev_.nvm.peek_node({t, i});
}

RunStats Controller::stats() const {
  RunStats s = stats_;
  s.nvm_writes = dev_.nvm.tally();
  s.nvm_reads = dev_.nvm.reads();
  s.counter_cache_hits = dev_.counter_cache.hits();
  s.counter_cache_misses = dev_.counter_cache.misses();
  s.mt_cache_hits = dev_.mt_cache.hits();
  s.mt_cache_misses = dev_.mt_cache.misses();
  s.wpq_stalls = dev_.wpq.stalls();
  s.latency_ns = static_cast<double>(s.nvm_reads) * kNvmReadNs + static_cast<double>(s.wpq_stalls) * kNvmWriteNs;
  s.pads_issued = ledger_.size();
  s.pad_duplicates = ledger_.duplicate_count();
  s.events = events_;
  return s;
}

}  // namespace triad
