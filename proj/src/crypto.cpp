#include "triad/crypto.hpp"

namespace triad {

std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t mix64(std::uint64_t x) {
  std::uint64_t s = x;
  return splitmix64(s);
}

KeySet::KeySet(std::uint64_t master_seed) : seed_(master_seed) {
  persistent_ = Key{0, mix64(master_seed ^ kTagPersistent)};
  tree_ = mix64(master_seed ^ kTagTree);
}

Key KeySet::volatile_for(std::uint64_t epoch) const {
  return Key{epoch + 1, mix64(mix64(seed_ ^ kTagVolatile) + epoch)};
}

std::uint64_t mac64(std::uint64_t key, std::span<const std::uint8_t> input) {
  if (input.size() != kBlockSize)
    throw ContractViolation("mac64 input must be exactly 64 bytes, got " +
                            std::to_string(input.size()));
  std::uint64_t h = kFnvOffset ^ key;
  for (auto b : input) {
    h ^= b;
    h *= kFnvPrime;
  }
  h ^= h >> 33;
  h *= kMixMul1;
  h ^= h >> 33;
  h *= kMixMul2;
  h ^= h >> 33;
  return h;
}

Block64 serialize_iv(const IV& iv, std::uint8_t lane) {
  Block64 out{};
  store_le64(out.data(), iv.page_id);
  store_le64(out.data() + 8, iv.major);
  out[16] = iv.page_offset;
  out[17] = iv.minor;
  out[63] = lane;
  return out;
}

Block64 gen_pad(const Key& key, const IV& iv) {
  Block64 pad{};
  for (std::uint8_t lane = 0; lane < 8; ++lane) {
    auto in = serialize_iv(iv, lane);
    store_le64(pad.data() + 8 * lane, mac64(key.material, in));
  }
  return pad;
}

Block64 encrypt_block(const Block64& plain, const Key& key, const IV& iv) {
  Block64 out = gen_pad(key, iv);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] ^= plain[i];
  return out;
}

Block64 decrypt_block(const Block64& cipher, const Key& key, const IV& iv) {
  return encrypt_block(cipher, key, iv);
}

std::uint64_t data_mac(const Key& key, const IV& iv, const Block64& ciphertext) {
  std::uint64_t inner = mac64(key.material ^ kTagDataMac, ciphertext);
  return mac64(inner, serialize_iv(iv, kDataMacLane));
}

std::uint64_t counter_digest(std::uint64_t tree_key, const Block64& counter_bytes) {
  if (is_zero(counter_bytes)) return 0;
  return mac64(tree_key, counter_bytes);
}

Block64 expand_payload(std::uint64_t seed) {
  Block64 out{};
  std::uint64_t state = seed;
  for (int lane = 0; lane < 8; ++lane) store_le64(out.data() + 8 * lane, splitmix64(state));
  return out;
}

}  // namespace triad
