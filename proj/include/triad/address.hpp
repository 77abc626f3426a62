#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "triad/common.hpp"

namespace triad {

enum class Region { Persistent, NonPersistent };

std::string_view to_string(Region r);

/// Physical byte offset into the NVM module.
struct Address {
  std::uint64_t byte_offset = 0;

  static constexpr Address of_block(std::uint64_t block) { return {block * kBlockSize}; }

  constexpr std::uint64_t block_index() const { return byte_offset / kBlockSize; }
  constexpr std::uint64_t page_index() const { return byte_offset / kPageSize; }
  constexpr unsigned block_in_page() const {
    return static_cast<unsigned>((byte_offset % kPageSize) / kBlockSize);
  }
  constexpr Address block_aligned() const { return {byte_offset - byte_offset % kBlockSize}; }

  friend constexpr bool operator==(Address, Address) = default;
  friend constexpr auto operator<=>(Address, Address) = default;
};

/// Persistent:non-persistent split in eighths of the capacity.
struct Ratio {
  unsigned persistent = 8;
  unsigned nonpersistent = 0;

  static Ratio parse(std::string_view text);
  std::string str() const;
  friend bool operator==(Ratio, Ratio) = default;
};

/// Partition of the address space into one contiguous persistent range and
/// the non-persistent remainder. Every root slot (capacity/8 bytes) lies
/// entirely on one side.
class RegionMap {
 public:
  /// Persistent range placed at the top of the address space.
  static RegionMap make(std::uint64_t capacity, Ratio ratio);
  static RegionMap make(std::uint64_t capacity, Ratio ratio, std::uint64_t persistent_start);

  Region region_of(Address addr) const;
  bool contains(Address addr) const { return addr.byte_offset < capacity_; }
  void check(Address addr) const;

  /// Class of root slot `slot` for a tree whose slots each span `slot_bytes`.
  Region slot_region(unsigned slot, std::uint64_t slot_bytes) const;

  std::uint64_t capacity() const { return capacity_; }
  std::uint64_t persistent_start() const { return start_; }
  std::uint64_t persistent_len() const { return len_; }
  Ratio ratio() const { return ratio_; }

 private:
  RegionMap(std::uint64_t capacity, Ratio ratio, std::uint64_t start, std::uint64_t len)
      : capacity_(capacity), ratio_(ratio), start_(start), len_(len) {}

  std::uint64_t capacity_;
  Ratio ratio_;
  std::uint64_t start_;
  std::uint64_t len_;
};

inline Region region_of(Address addr, const RegionMap& map) { return map.region_of(addr); }

/// Parses "64MB", "16GB", "4096", "0x1000".
std::uint64_t parse_size(std::string_view text);
std::string format_size(std::uint64_t bytes);

}  // namespace triad
