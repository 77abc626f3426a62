#include "triad/counters.hpp"

#include <limits>

namespace triad {

SplitCounterBlock::BumpResult SplitCounterBlock::bump(unsigned block_in_page) {
  if (block_in_page >= kBlocksPerPage)
    throw ContractViolation("block_in_page " + std::to_string(block_in_page) + " out of range");
  BumpResult r;
  if (minor[block_in_page] < kMinorMax) {
    ++minor[block_in_page];
    return r;
  }
  r.overflowed = true;
  if (major == std::numeric_limits<std::uint64_t>::max()) r.rekey = true;
  ++major;
  minor.fill(0);
  return r;
}

bool SplitCounterBlock::uninitialized() const {
  if (major != 0) return false;
  for (auto m : minor)
    if (m != 0) return false;
  return true;
}

Block64 SplitCounterBlock::serialize() const {
  Block64 out{};
  store_le64(out.data(), major);
  for (unsigned i = 0; i < kBlocksPerPage; ++i) {
    unsigned bit = 64 + 7 * i;
    unsigned v = minor[i] & 0x7f;
    for (unsigned b = 0; b < 7; ++b, ++bit)
      if (v & (1u << b)) out[bit / 8] |= static_cast<std::uint8_t>(1u << (bit % 8));
  }
  return out;
}

SplitCounterBlock SplitCounterBlock::deserialize(const Block64& bytes) {
  SplitCounterBlock c;
  c.major = load_le64(bytes.data());
  for (unsigned i = 0; i < kBlocksPerPage; ++i) {
    unsigned bit = 64 + 7 * i;
    unsigned v = 0;
    for (unsigned b = 0; b < 7; ++b, ++bit)
      if (bytes[bit / 8] & (1u << (bit % 8))) v |= 1u << b;
    c.minor[i] = static_cast<std::uint8_t>(v);
  }
  return c;
}

IV iv_for(Address addr, const SplitCounterBlock& ctr) {
  unsigned off = addr.block_in_page();
  return IV{addr.page_index(), static_cast<std::uint8_t>(off), ctr.major, ctr.minor[off]};
}

}  // namespace triad
