#include "triad/common.hpp"

#include <cstdio>

namespace triad {

std::string hex64(std::uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "0x%llx", static_cast<unsigned long long>(v));
  return buf;
}

AddressFault::AddressFault(std::uint64_t addr, std::uint64_t capacity)
    : std::out_of_range("address " + hex64(addr) + " outside capacity " + hex64(capacity)),
      addr_(addr) {}

namespace {

std::string describe(IntegrityViolation::Kind kind, unsigned tier, std::uint64_t index,
                     std::uint64_t address) {
  if (kind == IntegrityViolation::Kind::DataMac)
    return "data MAC mismatch at " + hex64(address);
  return "tree mismatch at level " + std::to_string(tier) + " node " + std::to_string(index) +
         " (address " + hex64(address) + ")";
}

}  // namespace

IntegrityViolation::IntegrityViolation(Kind kind, unsigned tier, std::uint64_t index,
                                       std::uint64_t address)
    : std::runtime_error(describe(kind, tier, index, address)),
      kind_(kind),
      tier_(tier),
      index_(index),
      address_(address) {}

}  // namespace triad
