#include <doctest.h>

#include <random>
#include <set>

#include "triad/crypto.hpp"

using namespace triad;

namespace {

Block64 random_block(std::mt19937_64& rng) {
  Block64 b;
  for (auto& x : b) x = static_cast<std::uint8_t>(rng());
  return b;
}

}  // namespace

TEST_CASE("golden values") {
  // Computed with an independent Python transcription of the primitives.
  Block64 zeros{};
  CHECK(mac64(0, zeros) == 0xecf8408bd84ff342ULL);
  Block64 ramp;
  for (unsigned i = 0; i < 64; ++i) ramp[i] = static_cast<std::uint8_t>(i);
  CHECK(mac64(0x0123456789abcdefULL, ramp) == 0x537fef8f32063abfULL);
  std::uint64_t s = 0;
  CHECK(splitmix64(s) == 0xe220a8397b1dcdafULL);  // published splitmix64 reference output

  KeySet keys(1);
  CHECK(keys.persistent_key().material == 0xf4fe69c420859e1fULL);
  CHECK(keys.tree_key() == 0x4db3436d5cf7590eULL);
  IV iv{1, 1, 0, 3};
  CHECK(load_le64(gen_pad(keys.persistent_key(), iv).data()) == 0xee542d14984fc507ULL);
  CHECK(load_le64(expand_payload(7).data()) == 0x63cbe1e459320dd7ULL);
}

TEST_CASE("mac64 input length is checked") {
  std::array<std::uint8_t, 63> short_input{};
  CHECK_THROWS_AS(mac64(1, short_input), ContractViolation);
}

TEST_CASE("every single-bit flip changes the MAC") {
  std::mt19937_64 rng(42);
  Block64 b = random_block(rng);
  const std::uint64_t key = rng();
  const std::uint64_t base = mac64(key, b);
  CHECK(mac64(key, b) == base);
  std::set<std::uint64_t> seen{base};
  for (unsigned bit = 0; bit < 512; ++bit) {
    Block64 f = b;
    f[bit / 8] ^= static_cast<std::uint8_t>(1u << (bit % 8));
    auto m = mac64(key, f);
    CHECK(m != base);
    seen.insert(m);
  }
  CHECK(seen.size() == 513);
}

TEST_CASE("avalanche") {
  // A flipped input bit should flip about half of the 64 output bits.
  std::mt19937_64 rng(7);
  double total = 0;
  const int trials = 10000;
  for (int t = 0; t < trials; ++t) {
    Block64 b = random_block(rng);
    std::uint64_t key = rng();
    unsigned bit = static_cast<unsigned>(rng() % 512);
    Block64 f = b;
    f[bit / 8] ^= static_cast<std::uint8_t>(1u << (bit % 8));
    total += __builtin_popcountll(mac64(key, b) ^ mac64(key, f));
  }
  CHECK(total / trials == doctest::Approx(32.0).epsilon(0.03));
}

TEST_CASE("pads") {
  KeySet keys(9);
  IV iv{3, 7, 2, 5};
  const Key pk = keys.persistent_key();
  CHECK(gen_pad(pk, iv) == gen_pad(pk, iv));
  CHECK(gen_pad(keys.volatile_for(0), iv) != gen_pad(keys.volatile_for(1), iv));
  IV other = iv;
  other.minor = 6;
  CHECK(gen_pad(pk, iv) != gen_pad(pk, other));

  std::mt19937_64 rng(3);
  Block64 plain = random_block(rng);
  Block64 c = encrypt_block(plain, pk, iv);
  CHECK(decrypt_block(c, pk, iv) == plain);
  CHECK(encrypt_block(Block64{}, pk, iv) == gen_pad(pk, iv));
  CHECK(decrypt_block(c, pk, other) != plain);
}

TEST_CASE("keys") {
  KeySet a(5), b(5);
  CHECK(a.persistent_key() == b.persistent_key());
  CHECK(a.volatile_key() == b.volatile_key());
  Key before = a.persistent_key();
  Key v0 = a.volatile_key();
  a.advance_epoch();
  CHECK(a.volatile_epoch() == 1);
  CHECK(a.persistent_key() == before);
  CHECK(a.volatile_key() != v0);
  CHECK(a.volatile_key() == b.volatile_for(1));
  CHECK(KeySet(6).persistent_key() != before);
}

TEST_CASE("data MAC binds ciphertext and IV") {
  KeySet keys(2);
  Key k = keys.persistent_key();
  Block64 c{};
  c[5] = 1;
  IV iv{1, 2, 3, 4};
  auto m = data_mac(k, iv, c);
  IV iv2 = iv;
  iv2.major = 4;
  CHECK(data_mac(k, iv2, c) != m);
  c[5] = 0;
  CHECK(data_mac(k, iv, c) != m);
  CHECK(counter_digest(keys.tree_key(), Block64{}) == 0);
  Block64 ctr{};
  ctr[8] = 1;
  CHECK(counter_digest(keys.tree_key(), ctr) == mac64(keys.tree_key(), ctr));
}
