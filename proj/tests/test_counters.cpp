#include <doctest.h>

#include <random>
#include <tuple>

#include "triad/counters.hpp"

using namespace triad;

TEST_CASE("bump") {
  SplitCounterBlock c;
  c.minor[3] = 5;
  auto r = c.bump(3);
  CHECK_FALSE(r.overflowed);
  CHECK(c.minor[3] == 6);

  c.minor[3] = 127;
  c.minor[9] = 40;
  r = c.bump(3);
  CHECK(r.overflowed);
  CHECK(c.major == 1);
  for (auto m : c.minor) CHECK(m == 0);
  CHECK_THROWS_AS(c.bump(64), ContractViolation);
}

TEST_CASE("bump loop oracle") {
  // Model: the pair (major, minor) advances as a base-128 odometer whose
  // carry clears every minor of the page.
  SplitCounterBlock c;
  std::uint64_t major = 0;
  unsigned minor = 0;
  for (int i = 1; i <= 300; ++i) {
    c.bump(0);
    if (minor == 127) {
      ++major;
      minor = 0;
    } else {
      ++minor;
    }
    REQUIRE(c.major == major);
    REQUIRE(c.minor[0] == minor);
    if (i == 128) CHECK((c.major == 1 && c.minor[0] == 0));
    if (i == 129) CHECK((c.major == 1 && c.minor[0] == 1));
  }
}

TEST_CASE("serialize layout and round trip") {
  SplitCounterBlock c;
  c.major = 0x0102030405060708ULL;
  c.minor[0] = 0x7f;
  c.minor[1] = 1;
  Block64 b = c.serialize();
  CHECK(b.size() == 64);
  CHECK(load_le64(b.data()) == 0x0102030405060708ULL);
  CHECK(b[8] == 0xff);  // minor0 bits 0..6 plus minor1 bit 0
  CHECK(b[9] == 0x00);
  CHECK(SplitCounterBlock::deserialize(b) == c);

  std::mt19937_64 rng(11);
  for (int t = 0; t < 1000; ++t) {
    SplitCounterBlock r;
    r.major = rng();
    for (auto& m : r.minor) m = static_cast<std::uint8_t>(rng() % 128);
    REQUIRE(SplitCounterBlock::deserialize(r.serialize()) == r);
  }
  CHECK(SplitCounterBlock{}.uninitialized());
  CHECK(SplitCounterBlock{}.block_unwritten(4));
}

TEST_CASE("iv_for") {
  SplitCounterBlock c;
  c.minor[1] = 3;
  IV iv = iv_for(Address{4160}, c);
  CHECK(iv == IV{1, 1, 0, 3});

  IV other = iv_for(Address{4096 + 128}, c);
  CHECK(other.page_id == iv.page_id);
  CHECK(other.major == iv.major);
  CHECK(other.page_offset != iv.page_offset);

  SplitCounterBlock d = c;
  d.bump(1);
  IV after = iv_for(Address{4160}, d);
  CHECK(after.page_id == iv.page_id);
  CHECK(after.page_offset == iv.page_offset);
  CHECK(after.major == iv.major);
  CHECK(after.minor == iv.minor + 1);
}

TEST_CASE("successive writes give strictly increasing counters") {
  SplitCounterBlock c;
  std::mt19937_64 rng(5);
  auto prev = std::make_tuple(c.major, c.minor[17]);
  for (int i = 0; i < 2000; ++i) {
    // Bumps of other blocks in the page may overflow and reset minors, but
    // never move block 17 backwards.
    c.bump(static_cast<unsigned>(rng() % 64));
    c.bump(17);
    auto now = std::make_tuple(c.major, c.minor[17]);
    REQUIRE(now > prev);
    prev = now;
  }
}
