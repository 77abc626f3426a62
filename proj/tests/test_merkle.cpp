#include <doctest.h>

#include <random>
#include <sstream>

#include "triad/crypto.hpp"
#include "triad/merkle.hpp"

using namespace triad;

namespace {

/// Straightforward reference: hash each root slot's counters in groups of
/// eight, level by level, until one digest is left.
RootRegister reference_root(std::uint64_t counters, std::uint64_t tree_key,
                            const std::vector<std::uint64_t>& digests) {
  RootRegister root;
  std::uint64_t per_slot = (counters + 7) / 8;
  for (unsigned s = 0; s < 8; ++s) {
    std::uint64_t first = s * per_slot;
    if (first >= counters) break;
    std::uint64_t last = std::min(counters, first + per_slot);
    std::vector<std::uint64_t> level(digests.begin() + first, digests.begin() + last);
    std::uint64_t width = per_slot;  // full span, even when the last slot is short
    while (width > 1) {
      std::vector<std::uint64_t> up;
      for (std::size_t i = 0; i < level.size(); i += 8) {
        MerkleNode n;
        for (std::size_t j = 0; j < 8 && i + j < level.size(); ++j) n.slots[j] = level[i + j];
        up.push_back(mac64(tree_key, n.serialize()));
      }
      level = up;
      width = (width + 7) / 8;
    }
    root.slots[s] = level.at(0);
  }
  return root;
}

}  // namespace

TEST_CASE("geometry") {
  auto g64 = TreeGeometry::for_capacity(64ULL << 20);
  CHECK(g64.counter_blocks() == 16384);
  CHECK(g64.slot_span() == 2048);
  CHECK(g64.levels() == 4);
  CHECK(g64.active_slots() == 8);
  CHECK(g64.nodes_per_level() == std::vector<std::uint64_t>{16384, 2048, 256, 32, 8});

  // 16GB: counters + 7 stored levels + root register = 9 tiers.
  auto g16 = TreeGeometry::for_capacity(16ULL << 30);
  CHECK(g16.tiers() == 9);
  CHECK(g16.levels() == 7);

  auto g1m = TreeGeometry::for_capacity(1ULL << 20);
  CHECK(g1m.counter_blocks() == 256);
  CHECK(g1m.levels() == 2);
  CHECK(g1m.nodes_per_level() == std::vector<std::uint64_t>{256, 32, 8});

  TreeGeometry one(1);
  CHECK(one.levels() == 0);
  CHECK(one.active_slots() == 1);

  TreeGeometry ragged(20);  // span 3, slots 0..6 active
  CHECK(ragged.slot_span() == 3);
  CHECK(ragged.active_slots() == 7);
  CHECK(ragged.count(0, 6) == 2);
  CHECK(ragged.count(0, 7) == 0);
  CHECK_THROWS_AS(TreeGeometry::for_capacity(1000), ConfigError);
}

TEST_CASE("parent, child and coverage arithmetic") {
  auto g = TreeGeometry::for_capacity(64ULL << 20);
  // Counter 2048+17 sits in slot 1; each tier divides the local index by 8.
  const std::uint64_t c = 2048 + 17;
  CHECK(g.root_slot_of_counter(c) == 1);
  CHECK(g.ancestor(c, 1) == NodeId{1, 256 + 2});
  CHECK(g.ancestor(c, 2) == NodeId{2, 32 + 0});
  CHECK(g.parent(NodeId{0, c}) == NodeId{1, 258});
  CHECK(g.position_in_parent(NodeId{0, c}) == 1);
  CHECK_FALSE(g.parent(NodeId{4, 1}).has_value());
  CHECK(g.position_in_parent(NodeId{4, 1}) == 1);
  CHECK(g.child(NodeId{1, 258}, 1) == NodeId{0, c});
  CHECK(g.child_count(NodeId{1, 258}) == 8);

  // An L1 node covers 8 counters = 32KB; L2 covers 256KB.
  auto [b1, e1] = g.byte_range(NodeId{1, 258});
  CHECK(e1 - b1 == 32 * 1024);
  CHECK(b1 == (2048 + 16) * 4096);
  auto [b2, e2] = g.byte_range(NodeId{2, 32});
  CHECK(e2 - b2 == 256 * 1024);
  auto [f, l] = g.counter_range(NodeId{4, 1});
  CHECK(f == 2048);
  CHECK(l == 4096);
  CHECK(g.slot_bytes() == (64ULL << 20) / 8);
}

TEST_CASE("build_full matches the reference") {
  std::mt19937_64 rng(1);
  for (std::uint64_t counters : {1ULL, 7ULL, 20ULL, 64ULL, 256ULL, 1000ULL, 4096ULL}) {
    TreeGeometry g(counters);
    std::vector<std::uint64_t> d(counters);
    for (auto& x : d) x = rng();
    auto t = MerkleTree::build_full(g, 99, [&](std::uint64_t i) { return d[i]; });
    CAPTURE(counters);
    CHECK(t.root() == reference_root(counters, 99, d));
  }
  TreeGeometry one(1);
  auto t = MerkleTree::build_full(one, 5, [](std::uint64_t) { return std::uint64_t{1234}; });
  CHECK(t.root().slots[0] == 1234);
}

TEST_CASE("update_path") {
  TreeGeometry g(256);
  MerkleTree t(g, 3);
  auto u = t.update_path(0, 77);
  REQUIRE(u.dirtied.size() == 2);
  CHECK(u.dirtied[0] == NodeId{1, 0});
  CHECK(u.dirtied[1] == NodeId{2, 0});
  CHECK(u.root_slot == 0);
  auto v = t.update_path(5, 78);
  CHECK(v.dirtied == u.dirtied);
  CHECK(t.update_path(255, 1).root_slot == 7);
  CHECK_THROWS_AS(t.update_path(256, 1), ContractViolation);
}

TEST_CASE("incremental updates equal a full rebuild") {
  std::mt19937_64 rng(2024);
  for (std::uint64_t counters : {256ULL, 300ULL, 16384ULL}) {
    TreeGeometry g(counters);
    std::vector<std::uint64_t> d(counters, 0);
    MerkleTree inc = MerkleTree::build_full(g, 17, [&](std::uint64_t i) { return d[i]; });
    for (int k = 0; k < 10000; ++k) {
      std::uint64_t i = rng() % counters;
      d[i] = rng();
      inc.update_path(i, d[i]);
    }
    auto full = MerkleTree::build_full(g, 17, [&](std::uint64_t i) { return d[i]; });
    CAPTURE(counters);
    CHECK(inc.root() == full.root());
    CHECK(inc.nodes() == full.nodes());
  }
}

TEST_CASE("verify_path") {
  TreeGeometry g(256);
  std::vector<std::uint64_t> d(256);
  std::mt19937_64 rng(8);
  for (auto& x : d) x = rng();
  auto t = MerkleTree::build_full(g, 4, [&](std::uint64_t i) { return d[i]; });
  auto ok = t.verify_path(77, d[77]);
  CHECK(ok.verified);
  CHECK(ok.nodes_checked == 2);

  auto bad = t.verify_path(77, d[77] ^ 1);
  CHECK_FALSE(bad.verified);
  CHECK(bad.mismatch_tier == 1);
  CHECK(bad.mismatch_index == 77 / 8);

  auto cached = t.verify_path(77, d[77], [](NodeId id) { return id.tier == 1; });
  CHECK(cached.verified);
  CHECK(cached.nodes_checked == 1);

  const NodeId l1 = g.ancestor(77, 1), l2 = g.ancestor(77, 2);
  CHECK(l2 == NodeId{2, 2});
  t.nodes().at(l2).slots[g.position_in_parent(l1)] ^= 1;
  auto up = t.verify_path(77, d[77]);
  CHECK_FALSE(up.verified);
  CHECK(up.mismatch_tier == 2);
  t.root().slots[2] ^= 1;
  CHECK(t.verify_path(64, d[64]).mismatch_tier == g.root_tier());
}

TEST_CASE("partition") {
  TreeGeometry g(256);
  MerkleTree t(g, 1);
  const std::uint64_t cap = g.capacity();
  auto p44 = t.partition(RegionMap::make(cap, Ratio{4, 4}));
  CHECK(p44.persistent.size() == p44.nonpersistent.size());
  CHECK(std::count(p44.root_slots.begin(), p44.root_slots.end(), Region::Persistent) == 4);
  auto p80 = t.partition(RegionMap::make(cap, Ratio{8, 0}));
  CHECK(p80.nonpersistent.empty());
  auto p17 = t.partition(RegionMap::make(cap, Ratio{1, 7}));
  for (unsigned tier = 1; tier <= g.levels(); ++tier) {
    auto n = std::count_if(p17.persistent.begin(), p17.persistent.end(), [&](NodeId id) { return id.tier == tier; });
    CHECK(static_cast<std::uint64_t>(n) * 8 == g.nodes_at(tier));
  }
}

TEST_CASE("dump and load round trip") {
  TreeGeometry g(300);
  std::mt19937_64 rng(12);
  auto t = MerkleTree::build_full(g, 6, [&](std::uint64_t) { return rng(); });
  std::stringstream ss;
  t.dump(ss);
  auto back = MerkleTree::load(ss, g, 6);
  CHECK(back.root() == t.root());
  CHECK(back.nodes() == t.nodes());
}

TEST_CASE("factory tree treats every counter as unwritten") {
  TreeGeometry g(256);
  auto f = factory_tree(g, 11);
  auto full = MerkleTree::build_full(g, 11, [](std::uint64_t) { return std::uint64_t{0}; });
  CHECK(f.root() == full.root());
  CHECK(f.nodes() == full.nodes());
}

TEST_CASE("rebuild_slot work accounting") {
  auto g = TreeGeometry::for_capacity(64ULL << 20);
  auto t = factory_tree(g, 1);
  NodeStore s = t.nodes();
  std::uint64_t work = 0;
  auto zero = [](std::uint64_t) { return std::uint64_t{0}; };
  CHECK(rebuild_slot(g, 1, s, 3, 1, zero, &work) == t.root().slots[3]);
  CHECK(work == 256 + 32 + 4 + 1);
  work = 0;
  rebuild_slot(g, 1, s, 3, 0, zero, &work);
  CHECK(work == 2048 + 256 + 32 + 4 + 1);
}
