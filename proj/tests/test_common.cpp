#include <doctest.h>

#include "triad/address.hpp"
#include "triad/common.hpp"

using namespace triad;

TEST_CASE("address decomposition") {
  Address a{4160};
  CHECK(a.block_index() == 65);
  CHECK(a.page_index() == 1);
  CHECK(a.block_in_page() == 1);
  CHECK(Address{4095}.block_in_page() == 63);
  CHECK(Address{100}.block_aligned() == Address{64});
  CHECK(Address::of_block(65) == a);
}

TEST_CASE("region_of") {
  const std::uint64_t GB = 1ULL << 30;
  auto map = RegionMap::make(16 * GB, Ratio{2, 6});
  CHECK(map.persistent_start() == 12 * GB);
  CHECK(map.persistent_len() == 4 * GB);
  CHECK(map.region_of(Address{12 * GB}) == Region::Persistent);
  CHECK(map.region_of(Address{12 * GB - 64}) == Region::NonPersistent);
  CHECK(map.region_of(Address{0}) == Region::NonPersistent);
  CHECK_THROWS_AS(map.region_of(Address{16 * GB}), AddressFault);
  CHECK_THROWS_AS(map.check(Address{16 * GB}), AddressFault);
}

TEST_CASE("ratio rules") {
  CHECK(Ratio::parse("4:4") == Ratio{4, 4});
  CHECK(Ratio::parse("1:7").str() == "1:7");
  CHECK_THROWS_AS(Ratio::parse("3:4"), ConfigError);
  CHECK_THROWS_AS(Ratio::parse("9:-1"), ConfigError);
  CHECK_THROWS_AS(Ratio::parse("x"), ConfigError);
  const std::uint64_t cap = 64ULL << 20;
  for (unsigned p = 0; p <= 8; ++p) {
    auto map = RegionMap::make(cap, Ratio{p, 8 - p});
    CHECK(map.persistent_len() * 8 == cap * p);
    for (unsigned s = 0; s < 8; ++s) {
      // Slot exclusivity: first and last byte of each eighth agree.
      Region first = map.region_of(Address{s * cap / 8});
      Region last = map.region_of(Address{(s + 1) * cap / 8 - 64});
      CHECK(first == last);
      CHECK(map.slot_region(s, cap / 8) == first);
    }
  }
  CHECK_THROWS_AS(RegionMap::make(cap, Ratio{4, 4}, 4096), ConfigError);
  CHECK_NOTHROW(RegionMap::make(cap, Ratio{4, 4}, 0));
}

TEST_CASE("sizes") {
  CHECK(parse_size("64MB") == 64ULL << 20);
  CHECK(parse_size("16GB") == 16ULL << 30);
  CHECK(parse_size("1TB") == 1ULL << 40);
  CHECK(parse_size("4096") == 4096);
  CHECK(parse_size("0x1000") == 4096);
  CHECK(format_size(64ULL << 20) == "64MB");
  CHECK(parse_size(format_size(3ULL << 40)) == 3ULL << 40);
  CHECK_THROWS_AS(parse_size("12XB"), ConfigError);
  CHECK(hex64(255) == "0xff");
}
