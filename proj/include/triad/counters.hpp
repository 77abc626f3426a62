#pragma once

#include <array>
#include <cstdint>

#include "triad/address.hpp"
#include "triad/common.hpp"

namespace triad {

inline constexpr unsigned kMinorMax = 127;

/// One 64B split-counter block: a 64-bit major counter shared by the page
/// and a 7-bit minor counter per 64B block of the page.
struct SplitCounterBlock {
  std::uint64_t major = 0;
  std::array<std::uint8_t, kBlocksPerPage> minor{};

  struct BumpResult {
    bool overflowed = false;  // minors reset; whole page must be re-encrypted
    bool rekey = false;       // major wrapped; key rotation event
  };

  BumpResult bump(unsigned block_in_page);

  /// All-zero block: never written since the last (re)initialisation.
  bool uninitialized() const;
  bool block_unwritten(unsigned block_in_page) const {
    return major == 0 && minor[block_in_page] == 0;
  }

  /// 8B little-endian major followed by 64 x 7-bit minors packed LSB-first.
  Block64 serialize() const;
  static SplitCounterBlock deserialize(const Block64& bytes);

  friend bool operator==(const SplitCounterBlock&, const SplitCounterBlock&) = default;
};

/// Counter-mode initialization vector.
struct IV {
  std::uint64_t page_id = 0;
  std::uint8_t page_offset = 0;
  std::uint64_t major = 0;
  std::uint8_t minor = 0;

  friend bool operator==(const IV&, const IV&) = default;
};

IV iv_for(Address addr, const SplitCounterBlock& ctr);

}  // namespace triad
