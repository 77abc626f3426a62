#include <doctest.h>

#include <random>

#include "triad/controller.hpp"
#include "triad/workload.hpp"

using namespace triad;

namespace {

SimConfig config(const char* policy, Ratio ratio = Ratio{4, 4}, std::uint64_t capacity = 64ULL << 20) {
  SimConfig c;
  c.capacity = capacity;
  c.ratio = ratio;
  c.policy = PersistPolicy::parse(policy);
  return c;
}

Block64 payload(std::uint64_t s) { return expand_payload(s); }

constexpr std::uint64_t kP = 48ULL << 20;  // inside the persistent half of 64MB at 4:4
constexpr std::uint64_t kNP = 4096;

}  // namespace

TEST_CASE("write then read returns the plaintext") {
  Controller c(config("triad:1"));
  CHECK(c.read(Address{kP}) == Block64{});
  c.write(Address{kP}, payload(1));
  c.write(Address{kNP + 64}, payload(2));
  CHECK(c.read(Address{kP}) == payload(1));
  CHECK(c.read(Address{kNP + 64}) == payload(2));
  CHECK(c.read(Address{kNP}) == Block64{});
  c.write(Address{kP + 5}, payload(3));  // unaligned address maps to its block
  CHECK(c.read(Address{kP}) == payload(3));
  CHECK_THROWS_AS(c.write(Address{64ULL << 20}, payload(1)), AddressFault);
  CHECK(c.region_of(Address{kP}) == Region::Persistent);
  CHECK(c.region_of(Address{kNP}) == Region::NonPersistent);
}

TEST_CASE("strict metadata writes follow 1+P") {
  const std::size_t N = 400;
  SimConfig base = config("strict", Ratio{8, 0});
  auto trace = scenario("pwrite", base.region_map(), 3, N);
  const unsigned H = base.geometry().levels();
  for (const char* pol : {"strict", "triad:0", "triad:1", "triad:2", "triad:3", "triad:4", "none"}) {
    SimConfig cfg = base;
    cfg.policy = PersistPolicy::parse(pol);
    Controller c(cfg);
    for (const auto& op : trace) c.write(Address{op.addr}, op.payload());
    c.finish();
    auto s = c.stats();
    std::uint64_t per_op = cfg.policy.mode == PolicyMode::Strict    ? 1 + H
                           : cfg.policy.mode == PolicyMode::NoPersist ? 0
                                                                      : 1 + cfg.policy.level;
    CAPTURE(pol);
    CHECK(s.nvm_writes.strict_metadata == N * per_op);
    CHECK(s.nvm_writes.data == N);
    CHECK(s.pads_issued == N);
  }
}

TEST_CASE("event order of one persistent write") {
  Controller c(config("triad:1"));
  std::vector<EventKind> seen;
  c.set_event_hook([&](const Event& e) { seen.push_back(e.kind); });
  c.write(Address{kP}, payload(1));
  std::vector<EventKind> want{EventKind::RegisterLog, EventKind::CacheUpdate, EventKind::Enqueue,
                              EventKind::Enqueue,     EventKind::Enqueue,     EventKind::ReadyClear};
  CHECK(seen == want);
  CHECK(c.event_count() == 6);
  CHECK(c.in_flight_committed());
  CHECK_FALSE(c.devices().regs.ready());
}

TEST_CASE("a crash after the register log leaves READY set") {
  Controller c(config("triad:1"));
  c.set_event_hook([](const Event& e) {
    if (e.kind == EventKind::CacheUpdate) throw CrashInjected(e.seq);
  });
  CHECK_THROWS_AS(c.write(Address{kP}, payload(1)), CrashInjected);
  CHECK(c.devices().regs.ready());
  const auto& rec = c.devices().regs.record();
  REQUIRE(rec.entries.size() == 3);
  CHECK(rec.entries[0].key.kind == BlockKind::Data);
  CHECK(rec.entries[1].key.kind == BlockKind::Counter);
  CHECK(rec.entries[2].key == BlockKey::node(c.geometry().ancestor(kP / 4096, 1)));
  CHECK(rec.root == c.devices().root);
  // Copying the record again is harmless.
  c.set_event_hook({});
  c.flush_record(rec);
  CHECK_FALSE(c.devices().regs.ready());
  CHECK_THROWS_AS(c.flush_record(rec), ContractViolation);
}

TEST_CASE("tampering is detected") {
  // Strict keeps every tree level durable, so a cold read needs no recovery.
  Controller c(config("strict"));
  c.write(Address{kP}, payload(1));
  c.write(Address{kP + 4096}, payload(2));
  c.finish();

  SUBCASE("data block") {
    c.crash();
    c.devices().nvm.corrupt_bit(BlockKey::data(kP / 64), 3);
    try {
      c.read(Address{kP});
      FAIL("no violation");
    } catch (const IntegrityViolation& e) {
      CHECK(e.kind() == IntegrityViolation::Kind::DataMac);
      CHECK(e.tier() == 0);
    }
    CHECK(c.read(Address{kP + 4096}) == payload(2));
  }
  SUBCASE("counter block") {
    c.crash();
    c.devices().nvm.corrupt_bit(BlockKey::counter(kP / 4096), 70);
    try {
      c.read(Address{kP});
      FAIL("no violation");
    } catch (const IntegrityViolation& e) {
      CHECK(e.kind() == IntegrityViolation::Kind::Tree);
      CHECK(e.tier() == 1);
      CHECK(e.index() == c.geometry().ancestor(kP / 4096, 1).index);
    }
  }
  SUBCASE("cached parent stops verification early") {
    c.read(Address{kP});  // counter and path now cached
    c.devices().nvm.corrupt_bit(BlockKey::node(c.geometry().ancestor(kP / 4096, 2)), 1);
    CHECK(c.read(Address{kP}) == payload(1));
  }
}

TEST_CASE("non-persistent counters are written back lazily") {
  Controller c(config("triad:1"));
  c.write(Address{kNP}, payload(1));
  c.finish();
  // The counter is dirty in the cache; NVM still holds the stale value.
  CHECK(c.devices().nvm.peek_counter(kNP / 4096) == Block64{});
  CHECK(c.peek_counter(kNP / 4096).minor[0] == 1);
  CHECK(c.devices().counter_cache.dirty_lines() == 1);
}

TEST_CASE("minor overflow re-encrypts the page") {
  Controller c(config("triad:1"));
  c.write(Address{kP + 64}, payload(9));
  for (int i = 0; i < 128; ++i) c.write(Address{kP}, payload(100 + i));
  auto s = c.stats();
  CHECK(s.page_reencryptions == 1);
  CHECK(c.peek_counter(kP / 4096).major == 1);
  CHECK(c.read(Address{kP}) == payload(227));
  CHECK(c.read(Address{kP + 64}) == payload(9));
  CHECK(c.read(Address{kP + 128}) == Block64{});
  CHECK(s.pad_duplicates == 0);
}

TEST_CASE("forced zero digest re-encrypts and converges") {
  SimConfig cfg = config("strict");
  cfg.zero_macs.push_back({kP / 4096, 3});
  Controller c(cfg);
  c.write(Address{kP}, payload(5));
  auto s = c.stats();
  CHECK(s.zero_mac_reencrypts == 3);
  CHECK(c.peek_counter(kP / 4096).minor[0] == 4);
  CHECK(c.read(Address{kP}) == payload(5));
  c.crash();
  CHECK(c.read(Address{kP}) == payload(5));

  SimConfig stuck = config("triad:1");
  stuck.zero_macs.push_back({kP / 4096, 64});
  Controller d(stuck);
  CHECK_THROWS_AS(d.write(Address{kP}, payload(5)), DiagnosticError);
}

TEST_CASE("deterministic state") {
  SimConfig cfg = config("triad:2");
  auto trace = scenario("mix3", cfg.region_map(), 4, 2000);
  auto run = [&] {
    Controller c(cfg);
    for (const auto& op : trace) {
      if (op.kind == OpKind::Read)
        c.read(Address{op.addr});
      else
        c.write(Address{op.addr}, op.payload());
    }
    c.finish();
    return std::make_pair(c.devices().full_hash(), c.stats().nvm_writes.total());
  };
  CHECK(run() == run());
}

TEST_CASE("latency model") {
  SimConfig cfg = config("strict");
  cfg.wpq_depth = 2;
  Controller c(cfg);
  for (int i = 0; i < 20; ++i) c.write(Address{kP + 4096ULL * i}, payload(i));
  auto s = c.stats();
  CHECK(s.wpq_stalls > 0);
  CHECK(s.latency_ns == doctest::Approx(s.nvm_reads * 60.0 + s.wpq_stalls * 150.0));
}
