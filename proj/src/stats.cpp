#include "triad/stats.hpp"

#include "triad/crypto.hpp"

namespace triad {

std::size_t PadRecordHash::operator()(const PadRecord& r) const {
  std::uint64_t h = mix64(r.key_material ^ mix64(r.iv.page_id));
  h = mix64(h ^ r.iv.major);
  h ^= (static_cast<std::uint64_t>(r.iv.page_offset) << 8) | r.iv.minor;
  return static_cast<std::size_t>(mix64(h));
}

bool PadLedger::insert(const PadRecord& r) {
  ++inserts_;
  if (seen_.insert(r).second) return true;
  ++dup_count_;
  if (dups_.size() < 64) dups_.push_back(r);
  return false;
}

}  // namespace triad
