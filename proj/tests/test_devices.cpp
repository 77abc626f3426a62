#include <doctest.h>

#include <random>
#include <sstream>

#include "triad/devices.hpp"

using namespace triad;

namespace {

Block64 filled(std::uint8_t v) {
  Block64 b;
  b.fill(v);
  return b;
}

struct Rig {
  TreeGeometry geom{256};
  NvmArray nvm{geom, NodeStore(geom)};
  WritePendingQueue wpq{16};
  MetadataCache cache{128 * 1024, 8};
};

}  // namespace

TEST_CASE("block keys pack and unpack") {
  for (BlockKey k : {BlockKey::data(12345), BlockKey::counter(7), BlockKey::node({3, 99})}) {
    CHECK(BlockKey::unpack(k.pack()) == k);
  }
  CHECK(BlockKey::counter(1).str() == "counter[1]");
  CHECK(BlockKey::node({2, 5}).str() == "L2[5]");
}

TEST_CASE("cache: locality and associativity") {
  Rig r;
  CHECK(r.cache.sets() == 256);
  auto key = BlockKey::counter(5);
  auto first = cache_access(r.cache, key, filled(1), AccessIntent::Read, WritePolicy::WriteBack, Region::Persistent,
                            r.wpq, r.nvm);
  CHECK_FALSE(first.hit);
  for (int i = 0; i < 5; ++i)
    CHECK(cache_access(r.cache, key, filled(1), AccessIntent::Read, WritePolicy::WriteBack, Region::Persistent, r.wpq,
                       r.nvm)
              .hit);
  CHECK(r.cache.misses() == 1);
  CHECK(r.cache.hits() == 5);

  // Nine blocks that share a set: exactly one eviction, of the LRU line.
  MetadataCache c(128 * 1024, 8);
  int evictions = 0;
  for (std::uint64_t i = 0; i < 9; ++i) {
    auto v = c.fill(BlockKey::counter(3 + i * c.sets()), filled(0), false, Region::Persistent);
    if (v) {
      ++evictions;
      CHECK(v->key == BlockKey::counter(3));
    }
  }
  CHECK(evictions == 1);
  CHECK(c.resident() == 8);
  // Touching the oldest line protects it; the next victim is the second.
  c.lookup(BlockKey::counter(3 + 1 * c.sets()));
  auto v = c.fill(BlockKey::counter(3 + 9 * c.sets()), filled(0), false, Region::Persistent);
  REQUIRE(v);
  CHECK(v->key == BlockKey::counter(3 + 2 * c.sets()));
}

TEST_CASE("cache: write-through vs write-back") {
  Rig r;
  auto key = BlockKey::node({1, 4});
  cache_access(r.cache, key, filled(2), AccessIntent::Write, WritePolicy::WriteThrough, Region::Persistent, r.wpq,
               r.nvm);
  CHECK(r.wpq.size() == 1);
  cache_access(r.cache, BlockKey::node({1, 5}), filled(3), AccessIntent::Write, WritePolicy::WriteBack,
               Region::Persistent, r.wpq, r.nvm);
  CHECK(r.wpq.size() == 1);
  CHECK(r.cache.dirty_lines() == 1);

  // A dirty victim becomes a write-back.
  MetadataCache small(64 * 8, 8);  // one set
  for (std::uint64_t i = 0; i < 8; ++i)
    cache_access(small, BlockKey::counter(i), filled(1), AccessIntent::Write, WritePolicy::WriteBack,
                 Region::NonPersistent, r.wpq, r.nvm);
  auto res = cache_access(small, BlockKey::counter(8), filled(1), AccessIntent::Read, WritePolicy::WriteBack,
                          Region::NonPersistent, r.wpq, r.nvm);
  REQUIRE(res.evicted_dirty);
  CHECK(res.evicted_dirty->key == BlockKey::counter(0));
  CHECK(r.wpq.size() == 2);
  CHECK_FALSE(r.wpq.entries().back().strict);
}

TEST_CASE("wpq semantics") {
  Rig r;
  CHECK(r.wpq.drain(r.nvm) == 0);
  CHECK(r.nvm.total_write_count() == 0);

  auto key = BlockKey::counter(9);
  for (std::uint8_t v = 1; v <= 3; ++v) r.wpq.enqueue({key, filled(v), 0, true}, r.nvm);
  CHECK(r.wpq.lookup(key)->payload == filled(3));
  CHECK(r.wpq.drain(r.nvm) == 3);
  CHECK(r.nvm.peek_counter(9) == filled(3));
  CHECK(r.nvm.write_count(key) == 3);

  // Full queue: the oldest entry goes to NVM and the producer stalls.
  WritePendingQueue q(2);
  CHECK_FALSE(q.enqueue({BlockKey::data(1), filled(1), 5, true}, r.nvm));
  CHECK_FALSE(q.enqueue({BlockKey::data(2), filled(2), 6, true}, r.nvm));
  CHECK(q.enqueue({BlockKey::data(3), filled(3), 7, true}, r.nvm));
  CHECK(q.stalls() == 1);
  CHECK(r.nvm.peek_data(1)->mac == 5);
  CHECK(r.nvm.peek_data(2) == nullptr);
  CHECK_THROWS_AS(WritePendingQueue(0), ConfigError);
}

TEST_CASE("queued writes survive a crash") {
  TreeGeometry g(256);
  DeviceState d{NvmArray(g, NodeStore(g)), WritePendingQueue(16), PersistentRegisters(), RootRegister(),
                MetadataCache(), MetadataCache()};
  d.wpq.enqueue({BlockKey::data(4), filled(9), 1, true}, d.nvm);
  d.counter_cache.fill(BlockKey::counter(0), filled(1), true, Region::NonPersistent);
  const auto before = d.durable_hash();
  const auto full_before = d.full_hash();
  d.crash();
  CHECK(d.durable_hash() == before);
  CHECK(d.full_hash() != full_before);
  CHECK(d.counter_cache.resident() == 0);
  CHECK(d.wpq.size() == 1);
  d.wpq.drain(d.nvm);
  CHECK(d.nvm.peek_data(4)->bytes == filled(9));
}

TEST_CASE("write tally partitions total writes") {
  Rig r;
  std::mt19937_64 rng(3);
  for (int i = 0; i < 500; ++i) {
    BlockKey k;
    switch (rng() % 4) {
      case 0: k = BlockKey::data(rng() % 1000); break;
      case 1: k = BlockKey::counter(rng() % 256); break;
      default: k = BlockKey::node({static_cast<unsigned>(1 + rng() % 2), rng() % 8}); break;
    }
    bool strict = rng() % 2;
    r.wpq.enqueue({k, filled(1), 0, strict}, r.nvm);
    if (i % 50 == 0) r.nvm.count_recovery_write(BlockKey::node({1, 0}));
  }
  r.wpq.drain(r.nvm);
  const auto& t = r.nvm.tally();
  CHECK(t.total() == r.nvm.total_write_count());
  CHECK(t.data + t.counter + t.nodes_total() + t.recovery == t.total());
  CHECK(t.strict_metadata + t.writeback_metadata == t.metadata());
}

TEST_CASE("registers") {
  CHECK(PersistentRegisters::slot_count(2) == 5);
  CHECK(PersistentRegisters::slot_count(0) == 3);
  PersistentRegisters regs;
  CHECK_FALSE(regs.ready());
  WriteRecord rec;
  rec.entries.push_back({BlockKey::data(1), filled(1), 2, true});
  rec.root.slots[3] = 44;
  regs.log(rec);
  CHECK(regs.ready());
  CHECK(regs.record() == rec);
  regs.clear_ready();
  CHECK_FALSE(regs.ready());
}

TEST_CASE("fault injector") {
  Rig r;
  FaultInjector f;
  f.add({BlockKey::counter(3), 9, true});
  f.add({BlockKey::node({1, 2}), 0, false});
  f.force_zero_mac(5, 2);
  f.apply(r.nvm);
  CHECK(f.pending().empty());
  CHECK(f.flagged().size() == 1);
  CHECK(f.flagged().count(BlockKey::counter(3)) == 1);
  CHECK(r.nvm.peek_counter(3)[1] == 2);
  CHECK(r.nvm.peek_node({1, 2}).slots[0] == 1);
  CHECK(f.take_zero_mac(5));
  CHECK(f.take_zero_mac(5));
  CHECK_FALSE(f.take_zero_mac(5));
}

TEST_CASE("snapshot round trip") {
  TreeGeometry g(256);
  DeviceState d{NvmArray(g, NodeStore(g)), WritePendingQueue(4), PersistentRegisters(), RootRegister(),
                MetadataCache(), MetadataCache()};
  std::mt19937_64 rng(5);
  for (int i = 0; i < 40; ++i) {
    Block64 b;
    for (auto& x : b) x = static_cast<std::uint8_t>(rng());
    d.wpq.enqueue({BlockKey::data(rng() % 64), b, rng(), true}, d.nvm);
    d.wpq.enqueue({BlockKey::counter(rng() % 256), b, 0, false}, d.nvm);
    d.wpq.enqueue({BlockKey::node({1, rng() % 32}), b, 0, true}, d.nvm);
  }
  WriteRecord rec;
  rec.entries.push_back({BlockKey::data(3), filled(3), 9, true});
  rec.root.slots[0] = 1;
  d.regs.log(rec);
  d.regs.pinned()[BlockKey::node({2, 1}).pack()] = MerkleNode{{1, 2, 3, 4, 5, 6, 7, 8}};
  d.root.slots[6] = 66;

  std::stringstream ss;
  d.save(ss);
  DeviceState e{NvmArray(g, NodeStore(g)), WritePendingQueue(4), PersistentRegisters(), RootRegister(),
                MetadataCache(), MetadataCache()};
  e.load(ss);
  CHECK(e.durable_hash() == d.durable_hash());
  CHECK(e.regs.record() == d.regs.record());
  CHECK(e.regs.ready());
  CHECK(e.wpq.entries() == d.wpq.entries());
  CHECK(e.root == d.root);
  CHECK(e.nvm.nodes() == d.nvm.nodes());

  std::stringstream bad("not a snapshot");
  CHECK_THROWS(e.load(bad));
}
