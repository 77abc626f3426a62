#include "triad/policy.hpp"

#include <charconv>

namespace triad {

PersistPolicy PersistPolicy::parse(std::string_view text) {
  if (text.size() > 4 && text.substr(text.size() - 4) == "+pin") {
    PersistPolicy p = parse(text.substr(0, text.size() - 4));
    p.pin_top = true;
    return p;
  }
  if (text == "strict") return strict();
  if (text == "none" || text == "nopersist") return none();
  std::string_view digits;
  if (text.substr(0, 6) == "triad:")
    digits = text.substr(6);
  else if (text.substr(0, 5) == "triad")
    digits = text.substr(5);
  else
    throw ConfigError("unknown policy '" + std::string(text) + "' (expected strict, triad:P or none)");
  unsigned p = 0;
  auto r = std::from_chars(digits.data(), digits.data() + digits.size(), p);
  if (digits.empty() || r.ec != std::errc{} || r.ptr != digits.data() + digits.size())
    throw ConfigError("policy '" + std::string(text) + "': persist level must be a non-negative integer");
  return triad(p);
}

std::string PersistPolicy::str() const {
  std::string s;
  switch (mode) {
    case PolicyMode::Strict: s = "strict"; break;
    case PolicyMode::Triad: s = "triad:" + std::to_string(level); break;
    case PolicyMode::NoPersist: s = "none"; break;
  }
  return pin_top ? s + "+pin" : s;
}

void PersistPolicy::validate(const TreeGeometry& geom) const {
  if (mode == PolicyMode::Triad && level > geom.levels())
    throw ConfigError("persist level " + std::to_string(level) + " exceeds the tree's " +
                      std::to_string(geom.levels()) + " NVM levels for " + format_size(geom.capacity()));
}

bool PersistPolicy::counter_strict(Region r) const {
  switch (mode) {
    case PolicyMode::Strict: return true;
    case PolicyMode::Triad: return r == Region::Persistent;
    case PolicyMode::NoPersist: return false;
  }
  return false;
}

bool PersistPolicy::node_strict(unsigned tier, Region r) const {
  switch (mode) {
    case PolicyMode::Strict: return true;
    case PolicyMode::Triad: return r == Region::Persistent && tier <= level;
    case PolicyMode::NoPersist: return false;
  }
  return false;
}

int PersistPolicy::persisted_top(const TreeGeometry& geom) const {
  switch (mode) {
    case PolicyMode::Strict: return static_cast<int>(geom.levels());
    case PolicyMode::Triad: return static_cast<int>(level);
    case PolicyMode::NoPersist: return -1;
  }
  return -1;
}

}  // namespace triad
