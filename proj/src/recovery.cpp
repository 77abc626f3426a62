#include "triad/recovery.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

namespace triad {

std::string_view to_string(RecoveryOutcome o) {
  switch (o) {
    case RecoveryOutcome::Verified: return "verified";
    case RecoveryOutcome::Partial: return "partial";
    case RecoveryOutcome::Failed: return "failed";
  }
  return "?";
}

std::string tier_name(int tier) {
  if (tier < 0) return "data";
  if (tier == 0) return "counters";
  return "L" + std::to_string(tier);
}

namespace {

unsigned slot_of_key(const TreeGeometry& geom, BlockKey key) {
  switch (key.kind) {
    case BlockKind::Data: return geom.root_slot_of_counter(key.index / kBlocksPerPage);
    case BlockKind::Counter: return geom.root_slot_of_counter(key.index);
    case BlockKind::Node: break;
  }
  return geom.slot_of(key.node_id());
}

UnverifiableRange range_of(const TreeGeometry& geom, NodeId id, std::string cause) {
  if (id.tier == 0) return {id.index * kPageSize, (id.index + 1) * kPageSize, std::move(cause)};
  auto [b, e] = geom.byte_range(id);
  return {b, e, std::move(cause)};
}

CounterDigestFn nvm_counter_digests(const NvmArray& nvm, std::uint64_t tree_key) {
  return [&nvm, tree_key](std::uint64_t i) {
    nvm.note_touch();
    return counter_digest(tree_key, nvm.peek_counter(i));
  };
}

void count_slot_writes(NvmArray& nvm, const TreeGeometry& geom, unsigned slot, unsigned from, unsigned to) {
  for (unsigned t = from; t <= to; ++t) {
    std::uint64_t base = slot * geom.stride(t);
    for (std::uint64_t i = 0; i < geom.count(t, slot); ++i) nvm.count_recovery_write(BlockKey::node({t, base + i}));
  }
}

std::string human_bytes(std::uint64_t n) {
  if (n % (1ULL << 20) == 0 && n) return std::to_string(n >> 20) + "MB";
  if (n % 1024 == 0 && n) return std::to_string(n >> 10) + "KB";
  return std::to_string(n) + "B";
}

}  // namespace

PinpointResult pinpoint(Controller& c, unsigned slot, int persisted_top, const std::set<BlockKey>& flagged,
                        std::uint64_t* work) {
  const auto& geom = c.geometry();
  auto& dev = c.devices();
  auto& nvm = dev.nvm;
  const std::uint64_t tk = c.keys().tree_key();
  const unsigned H = geom.levels();
  auto digests = nvm_counter_digests(nvm, tk);
  PinpointResult res;

  NodeStore scratch;
  for (int T = persisted_top; T >= 0; --T) {
    scratch = nvm.nodes();
    if (rebuild_slot(geom, tk, scratch, slot, static_cast<unsigned>(T), digests, work) == dev.root.slots[slot]) {
      res.trusted_tier = T;
      break;
    }
  }

  auto rewrite = [&](unsigned from, unsigned to, const NodeStore& src) {
    for (unsigned t = std::max(from, 1u); t <= to; ++t) {
      std::uint64_t base = slot * geom.stride(t);
      for (std::uint64_t i = 0; i < geom.count(t, slot); ++i) {
        NodeId id{t, base + i};
        if (!(nvm.peek_node(id) == src.at(id))) nvm.write_node(id, src.at(id), WriteCause::Recovery);
      }
    }
  };

  if (res.trusted_tier >= 0) {
    const unsigned T = static_cast<unsigned>(res.trusted_tier);
    // Durable nodes above the trusted tier that disagree with it.
    for (int t = std::max<int>(T + 1, 1); t <= persisted_top; ++t) {
      std::uint64_t base = slot * geom.stride(t);
      for (std::uint64_t i = 0; i < geom.count(t, slot); ++i) {
        NodeId id{static_cast<unsigned>(t), base + i};
        if (!(nvm.peek_node(id) == scratch.at(id)))
          res.ranges.push_back(range_of(geom, id, BlockKey::node(id).str() + " disagrees with " + tier_name(T)));
      }
    }
    if (T < H) rewrite(T + 1, H, scratch);

    // Blocks reported uncorrectable below the trusted tier: walk up to it.
    for (const auto& key : flagged) {
      if (slot_of_key(geom, key) != slot) continue;
      NodeId cur = key.kind == BlockKind::Node ? key.node_id() : NodeId{0, key.kind == BlockKind::Counter ? key.index : key.index / kBlocksPerPage};
      bool chain_ok = true;
      if (cur.tier < T) {
        std::uint64_t d = cur.tier == 0 ? counter_digest(tk, nvm.peek_counter(cur.index))
                                        : node_digest(tk, nvm.peek_node(cur));
        if (cur.tier == 0) nvm.note_touch();
        while (cur.tier < T) {
          NodeId parent = *geom.parent(cur);
          const MerkleNode& pn = nvm.peek_node(parent);
          if (work) ++*work;
          if (pn.slots[geom.position_in_parent(cur)] != d) {
            res.ranges.push_back(range_of(geom, cur, (cur.tier == 0 ? BlockKey::counter(cur.index) : BlockKey::node(cur)).str() +
                                                         " fails against its " + tier_name(parent.tier) + " parent"));
            chain_ok = false;
            break;
          }
          d = node_digest(tk, pn);
          cur = parent;
        }
      }
      if (chain_ok && key.kind == BlockKind::Data) {
        Address a = Address::of_block(key.index);
        auto ctr = SplitCounterBlock::deserialize(nvm.peek_counter(a.page_index()));
        nvm.note_touch(2);
        if (!ctr.block_unwritten(a.block_in_page())) {
          const DataBlock* d = nvm.peek_data(key.index);
          DataBlock blk = d ? *d : DataBlock{};
          IV iv = iv_for(a, ctr);
          if (data_mac(c.select_key(a), iv, blk.bytes) != blk.mac)
            res.ranges.push_back({a.byte_offset, a.byte_offset + kBlockSize, key.str() + " fails its MAC"});
        }
      }
    }
  } else if (c.policy().pin_top && H >= 1) {
    // Nothing durable matched; the pinned registers stand in for the top
    // two tiers.
    res.used_pinned = true;
    const unsigned q = H >= 2 ? H - 1 : H;
    const auto& pinned = dev.regs.pinned();
    NodeStore restored = scratch;
    std::uint64_t base = slot * geom.stride(q);
    for (std::uint64_t i = 0; i < geom.count(q, slot); ++i) {
      NodeId id{q, base + i};
      const MerkleNode& pv = pinned.at(BlockKey::node(id).pack());
      if (!(scratch.at(id) == pv))
        res.ranges.push_back(range_of(geom, id, "subtree disagrees with pinned " + BlockKey::node(id).str()));
    }
    for (unsigned t = q; t <= H; ++t) {
      std::uint64_t b = slot * geom.stride(t);
      for (std::uint64_t i = 0; i < geom.count(t, slot); ++i)
        restored.at({t, b + i}) = pinned.at(BlockKey::node({t, b + i}).pack());
    }
    rewrite(static_cast<unsigned>(std::max(persisted_top, 0)) + 1, H, restored);
  } else {
    res.failed = true;
    auto [first, last] = geom.counter_range({H, slot * geom.stride(H)});
    res.ranges.push_back({first * kPageSize, last * kPageSize,
                          "root slot " + std::to_string(slot) + " mismatch with no lower durable tier"});
  }

  std::sort(res.ranges.begin(), res.ranges.end(),
            [](const UnverifiableRange& a, const UnverifiableRange& b) { return a.start < b.start; });
  res.ranges.erase(std::unique(res.ranges.begin(), res.ranges.end(),
                               [](const UnverifiableRange& a, const UnverifiableRange& b) {
                                 return a.start == b.start && a.end == b.end;
                               }),
                   res.ranges.end());
  return res;
}

std::uint64_t lazy_recover_nonpersistent(Controller& c, std::uint64_t* touched) {
  const auto& geom = c.geometry();
  auto& dev = c.devices();
  auto& nvm = dev.nvm;
  const std::uint64_t tk = c.keys().tree_key();
  const unsigned H = geom.levels();
  const std::uint64_t before = nvm.data_counter_touches();
  std::uint64_t work = 0;
  auto unused = [](std::uint64_t) -> std::uint64_t {
    throw ContractViolation("lazy recovery must not read counters");
  };
  for (unsigned s = 0; s < geom.active_slots(); ++s) {
    if (c.slot_classes()[s] != Region::NonPersistent) continue;
    if (H == 0) {
      dev.root.slots[s] = 0;
      continue;
    }
    std::uint64_t base = s * geom.stride(1);
    for (std::uint64_t i = 0; i < geom.count(1, s); ++i) {
      nvm.nodes_mut().at({1, base + i}) = MerkleNode{};
      nvm.count_recovery_write(BlockKey::node({1, base + i}));
    }
    dev.root.slots[s] = rebuild_slot(geom, tk, nvm.nodes_mut(), s, 1, unused, &work);
    if (H >= 2) count_slot_writes(nvm, geom, s, 2, H);
  }
  if (touched) *touched = nvm.data_counter_touches() - before;
  return work;
}

RecoveryReport recover(Controller& c) {
  auto& dev = c.devices();
  auto& nvm = dev.nvm;
  const auto& geom = c.geometry();
  const auto& pol = c.policy();
  const unsigned H = geom.levels();
  const std::uint64_t tk = c.keys().tree_key();

  RecoveryReport r;
  r.policy = pol.str();
  r.t_block = c.config().t_block;
  const std::uint64_t recovery_before = nvm.tally().recovery;

  dev.crash();
  r.wpq_drained = dev.wpq.drain(nvm);
  if (dev.regs.ready()) {
    for (const auto& e : dev.regs.record().entries) nvm.apply(e, WriteCause::Recovery);
    dev.root = dev.regs.record().root;
    dev.regs.clear_ready();
    r.record_replayed = true;
  }

  const auto& flagged = c.faults().flagged();
  bool failed = false;

  if (pol.mode == PolicyMode::NoPersist) {
    // Nothing durable to rebuild from: reinitialise the whole memory.
    nvm.reset_contents(c.factory_nodes());
    dev.root = c.factory_root();
    std::uint64_t data_blocks = geom.capacity() / kBlockSize;
    r.simulated_work = data_blocks;
    for (unsigned t = 1; t <= H; ++t)
      for (unsigned s = 0; s < geom.active_slots(); ++s) r.simulated_work += geom.count(t, s);
    r.rebuilt = std::make_pair(-1, static_cast<int>(H));
  } else {
    const int top = pol.persisted_top(geom);
    auto digests = nvm_counter_digests(nvm, tk);
    for (unsigned s = 0; s < geom.active_slots(); ++s) {
      if (c.slot_classes()[s] != Region::Persistent) continue;
      bool slot_flagged = std::any_of(flagged.begin(), flagged.end(),
                                      [&](const BlockKey& k) { return slot_of_key(geom, k) == s; });
      bool mismatch = false;
      if (pol.mode == PolicyMode::Triad) {
        const unsigned P = pol.level;
        std::uint64_t d = rebuild_slot(geom, tk, nvm.nodes_mut(), s, P, digests, &r.simulated_work);
        if (P < H) {
          count_slot_writes(nvm, geom, s, P + 1, H);
          r.rebuilt = std::make_pair(static_cast<int>(P) + 1, static_cast<int>(H));
        }
        mismatch = d != dev.root.slots[s];
      }
      if (mismatch || slot_flagged) {
        auto pr = pinpoint(c, s, top, flagged, &r.pinpoint_work);
        failed = failed || pr.failed;
        r.unverifiable.insert(r.unverifiable.end(), pr.ranges.begin(), pr.ranges.end());
      }
    }
    r.lazy_init_work = lazy_recover_nonpersistent(c, &r.np_blocks_touched);
  }

  c.faults().clear_flagged();
  if (!c.config().attack_demo) c.keys().advance_epoch();
  c.refresh_pinned();

  if (failed)
    r.outcome = RecoveryOutcome::Failed;
  else if (!r.unverifiable.empty())
    r.outcome = RecoveryOutcome::Partial;
  r.recovery_writes = nvm.tally().recovery - recovery_before;
  r.volatile_epoch = c.keys().volatile_epoch();
  ++c.counters().recoveries;
  return r;
}

std::string RecoveryReport::text() const {
  std::ostringstream o;
  char buf[64];
  o << "recovery\n";
  o << "  policy             " << policy << "\n";
  o << "  outcome            " << to_string(outcome) << "\n";
  o << "  wpq_drained        " << wpq_drained << "\n";
  o << "  record_replayed    " << (record_replayed ? "yes" : "no") << "\n";
  o << "  rebuilt_tiers      "
    << (rebuilt ? tier_name(rebuilt->first) + ".." + tier_name(rebuilt->second) : std::string("none")) << "\n";
  o << "  simulated_work     " << simulated_work << " blocks\n";
  std::snprintf(buf, sizeof buf, "%.9g", wall_model_seconds());
  o << "  wall_model_s       " << buf << "\n";
  o << "  pinpoint_work      " << pinpoint_work << " blocks\n";
  o << "  lazy_init_work     " << lazy_init_work << " blocks\n";
  o << "  np_blocks_touched  " << np_blocks_touched << "\n";
  o << "  recovery_writes    " << recovery_writes << "\n";
  o << "  volatile_epoch     " << volatile_epoch << "\n";
  o << "  unverifiable       " << unverifiable.size() << "\n";
  for (const auto& u : unverifiable)
    o << "    [" << hex64(u.start) << ", " << hex64(u.end) << ") " << human_bytes(u.bytes()) << "  " << u.cause
      << "\n";
  return o.str();
}

std::string RecoveryReport::csv_header() {
  return "policy,outcome,wpq_drained,record_replayed,rebuilt_from,rebuilt_to,simulated_work,wall_model_s,"
         "pinpoint_work,lazy_init_work,np_blocks_touched,recovery_writes,volatile_epoch,unverifiable_ranges,"
         "unverifiable_bytes";
}

std::string RecoveryReport::csv_row() const {
  std::uint64_t bytes = 0;
  for (const auto& u : unverifiable) bytes += u.bytes();
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", wall_model_seconds());
  std::ostringstream o;
  o << policy << ',' << to_string(outcome) << ',' << wpq_drained << ',' << (record_replayed ? 1 : 0) << ','
    << (rebuilt ? tier_name(rebuilt->first) : "") << ',' << (rebuilt ? tier_name(rebuilt->second) : "") << ','
    << simulated_work << ',' << buf << ',' << pinpoint_work << ',' << lazy_init_work << ',' << np_blocks_touched
    << ',' << recovery_writes << ',' << volatile_epoch << ',' << unverifiable.size() << ',' << bytes;
  return o.str();
}

}  // namespace triad
