#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>

namespace triad {

inline constexpr std::uint64_t kBlockSize = 64;
inline constexpr std::uint64_t kPageSize = 4096;
inline constexpr std::uint64_t kBlocksPerPage = kPageSize / kBlockSize;
inline constexpr unsigned kArity = 8;

using Block64 = std::array<std::uint8_t, kBlockSize>;

inline void store_le64(std::uint8_t* dst, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) dst[i] = static_cast<std::uint8_t>(v >> (8 * i));
}

inline std::uint64_t load_le64(const std::uint8_t* src) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(src[i]) << (8 * i);
  return v;
}

inline bool is_zero(std::span<const std::uint8_t> bytes) {
  for (auto b : bytes)
    if (b != 0) return false;
  return true;
}

/// Rejected configuration (ratio rule, persist level, malformed file).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class AddressFault : public std::out_of_range {
 public:
  explicit AddressFault(std::uint64_t addr, std::uint64_t capacity);
  std::uint64_t address() const { return addr_; }

 private:
  std::uint64_t addr_;
};

/// Caller broke an API precondition (wrong length, bad index).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Raised when a bounded internal loop fails to converge (zero-MAC rule).
class DiagnosticError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tamper or corruption detected while verifying metadata or data.
///
/// `tier` is the tree tier whose stored slot disagreed with the recomputed
/// digest: 1 for a counter block checked against its level-1 parent, levels+1
/// for the on-chip root, 0 for a data block whose MAC failed.
class IntegrityViolation : public std::runtime_error {
 public:
  enum class Kind { Tree, DataMac };
  IntegrityViolation(Kind kind, unsigned tier, std::uint64_t index, std::uint64_t address);

  Kind kind() const { return kind_; }
  unsigned tier() const { return tier_; }
  std::uint64_t index() const { return index_; }
  std::uint64_t address() const { return address_; }

 private:
  Kind kind_;
  unsigned tier_;
  std::uint64_t index_;
  std::uint64_t address_;
};

std::string hex64(std::uint64_t v);

}  // namespace triad
