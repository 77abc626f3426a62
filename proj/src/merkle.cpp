#include "triad/merkle.hpp"

#include <algorithm>
#include <istream>
#include <ostream>

#include "triad/crypto.hpp"

namespace triad {

namespace {

std::uint64_t ceil_div(std::uint64_t a, std::uint64_t b) { return a / b + (a % b != 0); }

}  // namespace

TreeGeometry::TreeGeometry(std::uint64_t counter_blocks) : counters_(counter_blocks) {
  if (counter_blocks == 0) throw ContractViolation("tree needs at least one counter block");
  span_ = ceil_div(counters_, kArity);
  active_ = static_cast<unsigned>(ceil_div(counters_, span_));
  pow8_.push_back(1);
  levels_ = 0;
  while (ceil_div(span_, pow8_.back()) > 1) {
    pow8_.push_back(pow8_.back() * kArity);
    ++levels_;
  }
}

TreeGeometry TreeGeometry::for_capacity(std::uint64_t capacity_bytes) {
  if (capacity_bytes == 0 || capacity_bytes % kPageSize != 0)
    throw ConfigError("capacity must be a nonzero multiple of 4KB");
  return TreeGeometry(capacity_bytes / kPageSize);
}

std::uint64_t TreeGeometry::stride(unsigned tier) const {
  if (tier > levels_) throw ContractViolation("tier " + std::to_string(tier) + " above tree");
  return ceil_div(span_, pow8_[tier]);
}

std::uint64_t TreeGeometry::count(unsigned tier, unsigned slot) const {
  if (slot >= active_) return 0;
  std::uint64_t first = static_cast<std::uint64_t>(slot) * span_;
  std::uint64_t cnt = std::min(span_, counters_ - first);
  return ceil_div(cnt, pow8_.at(tier));
}

std::uint64_t TreeGeometry::nodes_at(unsigned tier) const {
  return (active_ - 1) * stride(tier) + count(tier, active_ - 1);
}

std::vector<std::uint64_t> TreeGeometry::nodes_per_level() const {
  std::vector<std::uint64_t> out;
  for (unsigned t = 0; t <= levels_; ++t) out.push_back(nodes_at(t));
  return out;
}

unsigned TreeGeometry::slot_of(NodeId id) const {
  return static_cast<unsigned>(id.index / stride(id.tier));
}

bool TreeGeometry::valid(NodeId id) const {
  if (id.tier > levels_) return false;
  unsigned s = slot_of(id);
  return s < active_ && id.index % stride(id.tier) < count(id.tier, s);
}

std::optional<NodeId> TreeGeometry::parent(NodeId id) const {
  if (id.tier >= levels_) return std::nullopt;
  std::uint64_t st = stride(id.tier);
  std::uint64_t s = id.index / st;
  std::uint64_t local = id.index % st;
  return NodeId{id.tier + 1, s * stride(id.tier + 1) + local / kArity};
}

unsigned TreeGeometry::position_in_parent(NodeId id) const {
  if (id.tier >= levels_) return slot_of(id);
  return static_cast<unsigned>((id.index % stride(id.tier)) % kArity);
}

unsigned TreeGeometry::child_count(NodeId id) const {
  if (id.tier == 0) return 0;
  unsigned s = slot_of(id);
  std::uint64_t local = id.index % stride(id.tier);
  std::uint64_t below = count(id.tier - 1, s);
  std::uint64_t first = local * kArity;
  if (first >= below) return 0;
  return static_cast<unsigned>(std::min<std::uint64_t>(kArity, below - first));
}

NodeId TreeGeometry::child(NodeId id, unsigned j) const {
  unsigned s = slot_of(id);
  std::uint64_t local = id.index % stride(id.tier);
  return NodeId{id.tier - 1, s * stride(id.tier - 1) + local * kArity + j};
}

NodeId TreeGeometry::ancestor(std::uint64_t counter, unsigned tier) const {
  std::uint64_t s = counter / span_;
  std::uint64_t local = (counter % span_) / pow8_.at(tier);
  return NodeId{tier, s * stride(tier) + local};
}

unsigned TreeGeometry::root_slot_of_counter(std::uint64_t counter) const {
  return static_cast<unsigned>(counter / span_);
}

std::pair<std::uint64_t, std::uint64_t> TreeGeometry::counter_range(NodeId id) const {
  unsigned s = slot_of(id);
  std::uint64_t local = id.index % stride(id.tier);
  std::uint64_t base = static_cast<std::uint64_t>(s) * span_;
  std::uint64_t cnt = std::min(span_, counters_ - base);
  std::uint64_t first = local * pow8_.at(id.tier);
  std::uint64_t last = std::min((local + 1) * pow8_.at(id.tier), cnt);
  return {base + first, base + last};
}

std::pair<std::uint64_t, std::uint64_t> TreeGeometry::byte_range(NodeId id) const {
  auto [first, last] = counter_range(id);
  return {first * kPageSize, last * kPageSize};
}

Block64 MerkleNode::serialize() const {
  Block64 out{};
  for (unsigned j = 0; j < kArity; ++j) store_le64(out.data() + 8 * j, slots[j]);
  return out;
}

MerkleNode MerkleNode::deserialize(const Block64& bytes) {
  MerkleNode n;
  for (unsigned j = 0; j < kArity; ++j) n.slots[j] = load_le64(bytes.data() + 8 * j);
  return n;
}

bool MerkleNode::all_zero() const {
  return std::all_of(slots.begin(), slots.end(), [](std::uint64_t s) { return s == 0; });
}

std::uint64_t node_digest(std::uint64_t tree_key, const MerkleNode& node) {
  return mac64(tree_key, node.serialize());
}

NodeStore::NodeStore(const TreeGeometry& geom) {
  tiers_.resize(geom.levels());
  for (unsigned t = 1; t <= geom.levels(); ++t) tiers_[t - 1].resize(geom.nodes_at(t));
}

std::uint64_t item_digest(std::uint64_t tree_key, const NodeStore& store, NodeId id,
                          const CounterDigestFn& counter_digest_of) {
  if (id.tier == 0) return counter_digest_of(id.index);
  return node_digest(tree_key, store.at(id));
}

std::uint64_t rebuild_slot(const TreeGeometry& geom, std::uint64_t tree_key, NodeStore& store,
                           unsigned slot, unsigned from_tier,
                           const CounterDigestFn& counter_digest_of, std::uint64_t* work) {
  if (from_tier > geom.levels())
    throw ContractViolation("rebuild tier " + std::to_string(from_tier) + " above tree");
  std::uint64_t units = geom.count(from_tier, slot);
  for (unsigned t = from_tier + 1; t <= geom.levels(); ++t) {
    std::uint64_t base = slot * geom.stride(t);
    std::uint64_t n = geom.count(t, slot);
    for (std::uint64_t local = 0; local < n; ++local) {
      NodeId id{t, base + local};
      MerkleNode node;
      unsigned kids = geom.child_count(id);
      for (unsigned j = 0; j < kids; ++j)
        node.slots[j] = item_digest(tree_key, store, geom.child(id, j), counter_digest_of);
      store.at(id) = node;
    }
    units += n;
  }
  if (work) *work += units;
  NodeId top{geom.levels(), slot * geom.stride(geom.levels())};
  return item_digest(tree_key, store, top, counter_digest_of);
}

MerkleTree::MerkleTree(const TreeGeometry& geom, std::uint64_t tree_key)
    : geom_(geom), key_(tree_key), store_(geom) {}

MerkleTree MerkleTree::build_full(const TreeGeometry& geom, std::uint64_t tree_key,
                                  const CounterDigestFn& counter_digest_of) {
  MerkleTree tree(geom, tree_key);
  for (unsigned s = 0; s < geom.active_slots(); ++s)
    tree.root_.slots[s] = rebuild_slot(geom, tree_key, tree.store_, s, 0, counter_digest_of, nullptr);
  return tree;
}

PathUpdate MerkleTree::update_path(std::uint64_t counter_index, std::uint64_t counter_digest) {
  if (counter_index >= geom_.counter_blocks())
    throw ContractViolation("counter index " + std::to_string(counter_index) + " out of range");
  PathUpdate out;
  NodeId id{0, counter_index};
  std::uint64_t d = counter_digest;
  while (auto p = geom_.parent(id)) {
    store_.at(*p).slots[geom_.position_in_parent(id)] = d;
    out.dirtied.push_back(*p);
    d = node_digest(key_, store_.at(*p));
    id = *p;
  }
  out.root_slot = geom_.root_slot_of_counter(counter_index);
  root_.slots[out.root_slot] = d;
  return out;
}

VerifyOutcome MerkleTree::verify_path(std::uint64_t counter_index, std::uint64_t counter_digest,
                                      const std::function<bool(NodeId)>& trusted) const {
  VerifyOutcome out;
  NodeId id{0, counter_index};
  std::uint64_t d = counter_digest;
  while (true) {
    auto p = geom_.parent(id);
    if (!p) {
      unsigned s = geom_.root_slot_of_counter(counter_index);
      if (root_.slots[s] != d) {
        out.verified = false;
        out.mismatch_tier = geom_.root_tier();
        out.mismatch_index = s;
      }
      return out;
    }
    const MerkleNode& node = store_.at(*p);
    ++out.nodes_checked;
    if (node.slots[geom_.position_in_parent(id)] != d) {
      out.verified = false;
      out.mismatch_tier = p->tier;
      out.mismatch_index = p->index;
      return out;
    }
    if (trusted && trusted(*p)) return out;
    d = node_digest(key_, node);
    id = *p;
  }
}

Partition MerkleTree::partition(const RegionMap& map) const {
  if (map.capacity() != geom_.capacity())
    throw ConfigError("region map capacity does not match the tree");
  Partition out;
  for (unsigned s = 0; s < kArity; ++s) out.root_slots[s] = map.slot_region(s, geom_.slot_bytes());
  for (unsigned t = 1; t <= geom_.levels(); ++t) {
    std::uint64_t n = geom_.nodes_at(t);
    for (std::uint64_t i = 0; i < n; ++i) {
      NodeId id{t, i};
      if (out.root_slots[geom_.slot_of(id)] == Region::Persistent)
        out.persistent.push_back(id);
      else
        out.nonpersistent.push_back(id);
    }
  }
  return out;
}

void MerkleTree::dump(std::ostream& out) const {
  MerkleNode root_node;
  root_node.slots = root_.slots;
  auto bytes = root_node.serialize();
  out.write(reinterpret_cast<const char*>(bytes.data()), bytes.size());
  for (unsigned t = geom_.levels(); t >= 1; --t) {
    for (std::uint64_t i = 0; i < geom_.nodes_at(t); ++i) {
      bytes = store_.at({t, i}).serialize();
      out.write(reinterpret_cast<const char*>(bytes.data()), bytes.size());
    }
  }
}

MerkleTree MerkleTree::load(std::istream& in, const TreeGeometry& geom, std::uint64_t tree_key) {
  MerkleTree tree(geom, tree_key);
  Block64 bytes{};
  auto read_block = [&] {
    if (!in.read(reinterpret_cast<char*>(bytes.data()), bytes.size()))
      throw ConfigError("tree dump truncated");
    return MerkleNode::deserialize(bytes);
  };
  tree.root_.slots = read_block().slots;
  for (unsigned t = geom.levels(); t >= 1; --t)
    for (std::uint64_t i = 0; i < geom.nodes_at(t); ++i) tree.store_.at({t, i}) = read_block();
  return tree;
}

MerkleTree factory_tree(const TreeGeometry& geom, std::uint64_t tree_key) {
  MerkleTree tree(geom, tree_key);
  // Unwritten counters digest to 0, so level 1 is all zeros already.
  unsigned from = geom.levels() == 0 ? 0 : 1;
  auto zero = [](std::uint64_t) { return std::uint64_t{0}; };
  for (unsigned s = 0; s < geom.active_slots(); ++s)
    tree.root().slots[s] = rebuild_slot(geom, tree_key, tree.nodes(), s, from, zero, nullptr);
  return tree;
}

}  // namespace triad
