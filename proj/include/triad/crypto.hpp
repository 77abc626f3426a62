#pragma once

// Deterministic toy primitives standing in for AES and a keyed MAC. They are
// not secure; they are bit-exact and portable so golden values can be shared
// across implementations. Constants are listed in docs/CRYPTO.md.

#include <cstdint>
#include <span>

#include "triad/common.hpp"
#include "triad/counters.hpp"

namespace triad {

inline constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
inline constexpr std::uint64_t kFnvPrime = 0x00000100000001b3ULL;
inline constexpr std::uint64_t kMixMul1 = 0xff51afd7ed558ccdULL;
inline constexpr std::uint64_t kMixMul2 = 0xc4ceb9fe1a85ec53ULL;

inline constexpr std::uint64_t kTagPersistent = 0x5045525349535421ULL;  // "PERSIST!"
inline constexpr std::uint64_t kTagVolatile = 0x564f4c4154494c45ULL;    // "VOLATILE"
inline constexpr std::uint64_t kTagTree = 0x545245454b455921ULL;        // "TREEKEY!"
inline constexpr std::uint64_t kTagDataMac = 0x4d41432d44415441ULL;     // "MAC-DATA"
inline constexpr std::uint8_t kDataMacLane = 0x80;

/// 128-bit key: a public identifier plus 64 bits of key material.
struct Key {
  std::uint64_t id = 0;
  std::uint64_t material = 0;
  friend bool operator==(const Key&, const Key&) = default;
};

/// Persistent key plus a volatile key that rotates with every recovery.
class KeySet {
 public:
  explicit KeySet(std::uint64_t master_seed);

  const Key& persistent_key() const { return persistent_; }
  Key volatile_key() const { return volatile_for(epoch_); }
  Key volatile_for(std::uint64_t epoch) const;
  std::uint64_t tree_key() const { return tree_; }
  std::uint64_t volatile_epoch() const { return epoch_; }

  /// Called by recovery only.
  void advance_epoch() { ++epoch_; }

 private:
  std::uint64_t seed_;
  Key persistent_;
  std::uint64_t tree_;
  std::uint64_t epoch_ = 0;
};

std::uint64_t splitmix64(std::uint64_t& state);
std::uint64_t mix64(std::uint64_t x);

/// FNV-1a over 64 bytes with the key folded into the offset basis, followed
/// by the murmur3 fmix64 finalizer.
std::uint64_t mac64(std::uint64_t key, std::span<const std::uint8_t> input);

/// IV laid out in a 64B block; `lane` goes in the last byte.
Block64 serialize_iv(const IV& iv, std::uint8_t lane);

Block64 gen_pad(const Key& key, const IV& iv);
Block64 encrypt_block(const Block64& plain, const Key& key, const IV& iv);
Block64 decrypt_block(const Block64& cipher, const Key& key, const IV& iv);

/// MAC bound to the ciphertext and the counter-derived IV.
std::uint64_t data_mac(const Key& key, const IV& iv, const Block64& ciphertext);

/// Digest stored in a level-1 slot. An all-zero (never written) counter
/// block digests to 0.
std::uint64_t counter_digest(std::uint64_t tree_key, const Block64& counter_bytes);

/// Expands a trace payload seed into 64 bytes.
Block64 expand_payload(std::uint64_t seed);

}  // namespace triad
