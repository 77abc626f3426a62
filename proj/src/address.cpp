#include "triad/address.hpp"

#include <cctype>
#include <charconv>
#include <string>

namespace triad {

std::string_view to_string(Region r) {
  return r == Region::Persistent ? "persistent" : "nonpersistent";
}

Ratio Ratio::parse(std::string_view text) {
  auto colon = text.find(':');
  if (colon == std::string_view::npos) throw ConfigError("ratio must look like p:n, got '" + std::string(text) + "'");
  unsigned p = 0, n = 0;
  auto lhs = text.substr(0, colon);
  auto rhs = text.substr(colon + 1);
  auto r1 = std::from_chars(lhs.data(), lhs.data() + lhs.size(), p);
  auto r2 = std::from_chars(rhs.data(), rhs.data() + rhs.size(), n);
  if (r1.ec != std::errc{} || r1.ptr != lhs.data() + lhs.size() || r2.ec != std::errc{} ||
      r2.ptr != rhs.data() + rhs.size())
    throw ConfigError("ratio must look like p:n, got '" + std::string(text) + "'");
  if (p + n != 8)
    throw ConfigError("ratio " + std::string(text) +
                      " rejected: persistent and non-persistent eighths must sum to 8");
  return {p, n};
}

std::string Ratio::str() const {
  return std::to_string(persistent) + ":" + std::to_string(nonpersistent);
}

RegionMap RegionMap::make(std::uint64_t capacity, Ratio ratio) {
  std::uint64_t len = capacity / 8 * ratio.persistent;
  return make(capacity, ratio, capacity - len);
}

RegionMap RegionMap::make(std::uint64_t capacity, Ratio ratio, std::uint64_t persistent_start) {
  if (capacity == 0 || capacity % kPageSize != 0)
    throw ConfigError("capacity " + std::to_string(capacity) + " must be a nonzero multiple of 4KB");
  if (ratio.persistent + ratio.nonpersistent != 8)
    throw ConfigError("ratio " + ratio.str() + " rejected: eighths must sum to 8");

  if (ratio.persistent == 0) return RegionMap(capacity, ratio, capacity, 0);
  if (ratio.persistent == 8) {
    if (persistent_start != 0)
      throw ConfigError("ratio 8:0 requires the persistent region to start at 0");
    return RegionMap(capacity, ratio, 0, capacity);
  }

  // A split ratio needs capacity/8 to be a whole number of pages so each root
  // slot covers an exact eighth.
  std::uint64_t pages = capacity / kPageSize;
  if (pages % 8 != 0)
    throw ConfigError("capacity " + format_size(capacity) + " cannot be split " + ratio.str() +
                      ": capacity/8 is not a whole number of 4KB pages");
  std::uint64_t slot = capacity / 8;
  std::uint64_t len = slot * ratio.persistent;
  if (persistent_start % slot != 0)
    throw ConfigError("persistent region start " + hex64(persistent_start) +
                      " is not aligned to a root-slot boundary (" + format_size(slot) + ")");
  if (persistent_start + len > capacity)
    throw ConfigError("persistent region [" + hex64(persistent_start) + ", +" +
                      format_size(len) + ") exceeds capacity");
  return RegionMap(capacity, ratio, persistent_start, len);
}

void RegionMap::check(Address addr) const {
  if (addr.byte_offset >= capacity_) throw AddressFault(addr.byte_offset, capacity_);
}

Region RegionMap::region_of(Address addr) const {
  check(addr);
  bool inside = addr.byte_offset >= start_ && addr.byte_offset - start_ < len_;
  return inside ? Region::Persistent : Region::NonPersistent;
}

Region RegionMap::slot_region(unsigned slot, std::uint64_t slot_bytes) const {
  std::uint64_t first = static_cast<std::uint64_t>(slot) * slot_bytes;
  if (first >= capacity_) return Region::NonPersistent;
  return region_of(Address{first});
}

std::uint64_t parse_size(std::string_view text) {
  std::string s(text);
  if (s.empty()) throw ConfigError("empty size");
  std::uint64_t value = 0;
  std::size_t pos = 0;
  try {
    value = std::stoull(s, &pos, 0);
  } catch (const std::exception&) {
    throw ConfigError("malformed size '" + s + "'");
  }
  std::string suffix;
  for (; pos < s.size(); ++pos)
    if (!std::isspace(static_cast<unsigned char>(s[pos])))
      suffix += static_cast<char>(std::toupper(static_cast<unsigned char>(s[pos])));
  if (!suffix.empty() && suffix.back() == 'B') suffix.pop_back();
  unsigned shift = 0;
  if (suffix.empty()) shift = 0;
  else if (suffix == "K" || suffix == "KI") shift = 10;
  else if (suffix == "M" || suffix == "MI") shift = 20;
  else if (suffix == "G" || suffix == "GI") shift = 30;
  else if (suffix == "T" || suffix == "TI") shift = 40;
  else if (suffix == "P" || suffix == "PI") shift = 50;
  else throw ConfigError("unknown size suffix in '" + s + "'");
  if (shift && value > (~0ULL >> shift)) throw ConfigError("size '" + s + "' overflows");
  return value << shift;
}

std::string format_size(std::uint64_t bytes) {
  static const char* units[] = {"B", "KB", "MB", "GB", "TB", "PB"};
  unsigned u = 0;
  while (u + 1 < std::size(units) && bytes >= 1024 && bytes % 1024 == 0) {
    bytes /= 1024;
    ++u;
  }
  return std::to_string(bytes) + units[u];
}

}  // namespace triad
