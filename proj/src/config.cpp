#include "triad/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace triad {

namespace {

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    auto comma = s.find(',', pos);
    if (comma == std::string_view::npos) comma = s.size();
    auto item = trim(s.substr(pos, comma - pos));
    if (!item.empty()) out.push_back(item);
    pos = comma + 1;
  }
  return out;
}

std::uint64_t parse_u64(const std::string& s, const std::string& what) {
  try {
    std::size_t pos = 0;
    auto v = std::stoull(s, &pos, 0);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(what + ": expected an integer, got '" + s + "'");
  }
}

bool parse_bool(const std::string& s, const std::string& what) {
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw ConfigError(what + ": expected true/false, got '" + s + "'");
}

double parse_double(const std::string& s, const std::string& what) {
  try {
    std::size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(what + ": expected a number, got '" + s + "'");
  }
}

}  // namespace

Corruption parse_corruption(std::string_view text) {
  std::string s = trim(text);
  Corruption c;
  if (!s.empty() && s.back() == '!') {
    c.flagged = false;
    s.pop_back();
  }
  auto at = s.find('@');
  auto colon = s.rfind(':');
  if (at == std::string::npos || colon == std::string::npos || colon < at)
    throw ConfigError("corruption '" + s + "' must look like kind@index:bit");
  std::string kind = s.substr(0, at);
  std::uint64_t where = parse_u64(s.substr(at + 1, colon - at - 1), "corruption target");
  c.bit = static_cast<unsigned>(parse_u64(s.substr(colon + 1), "corruption bit"));
  if (c.bit >= 512) throw ConfigError("corruption bit " + std::to_string(c.bit) + " outside the 64B block");
  if (kind == "data") {
    if (where % kBlockSize != 0) throw ConfigError("data corruption address must be 64B aligned");
    c.key = BlockKey::data(where / kBlockSize);
  } else if (kind == "counter") {
    c.key = BlockKey::counter(where);
  } else if (kind.rfind("node", 0) == 0 && kind.size() > 4) {
    auto tier = parse_u64(kind.substr(4), "node tier");
    if (tier == 0) throw ConfigError("node tiers start at 1");
    c.key = BlockKey::node({static_cast<unsigned>(tier), where});
  } else {
    throw ConfigError("unknown corruption target '" + kind + "' (data, counter, nodeN)");
  }
  return c;
}

std::string format_corruption(const Corruption& c) {
  std::string s;
  switch (c.key.kind) {
    case BlockKind::Data: s = "data@" + hex64(c.key.index * kBlockSize); break;
    case BlockKind::Counter: s = "counter@" + std::to_string(c.key.index); break;
    case BlockKind::Node: s = "node" + std::to_string(c.key.tier) + "@" + std::to_string(c.key.index); break;
  }
  s += ":" + std::to_string(c.bit);
  return c.flagged ? s : s + "!";
}

RegionMap SimConfig::region_map() const {
  return persistent_start ? RegionMap::make(capacity, ratio, *persistent_start)
                          : RegionMap::make(capacity, ratio);
}

void SimConfig::validate() const {
  auto map = region_map();
  auto geom = geometry();
  policy.validate(geom);
  MetadataCache probe1(counter_cache_bytes, cache_ways);
  MetadataCache probe2(mt_cache_bytes, cache_ways);
  if (wpq_depth == 0) throw ConfigError("WPQ depth must be at least 1");
  if (!(t_block > 0)) throw ConfigError("t_block must be positive");
  for (const auto& f : faults) {
    switch (f.key.kind) {
      case BlockKind::Data:
        if (f.key.index >= capacity / kBlockSize)
          throw ConfigError("fault " + format_corruption(f) + " outside capacity");
        break;
      case BlockKind::Counter:
        if (f.key.index >= geom.counter_blocks())
          throw ConfigError("fault " + format_corruption(f) + " names a counter beyond capacity");
        break;
      case BlockKind::Node:
        if (!geom.valid(f.key.node_id()) || f.key.tier == 0)
          throw ConfigError("fault " + format_corruption(f) + " names a node outside the tree");
        break;
    }
  }
  for (const auto& [ci, n] : zero_macs)
    if (ci >= geom.counter_blocks())
      throw ConfigError("zero_mac counter " + std::to_string(ci) + " beyond capacity");
  (void)map;
}

std::string SimConfig::echo() const {
  std::ostringstream o;
  o << "[memory]\n";
  o << "capacity = " << format_size(capacity) << "\n";
  o << "ratio = " << ratio.str() << "\n";
  if (persistent_start) o << "persistent_start = " << hex64(*persistent_start) << "\n";
  o << "\n[policy]\n";
  PersistPolicy plain = policy;
  plain.pin_top = false;
  o << "mode = " << plain.str() << "\n";
  o << "pin_top = " << (policy.pin_top ? "true" : "false") << "\n";
  o << "\n[cache]\n";
  o << "counter_bytes = " << counter_cache_bytes << "\n";
  o << "mt_bytes = " << mt_cache_bytes << "\n";
  o << "ways = " << cache_ways << "\n";
  o << "\n[wpq]\n";
  o << "depth = " << wpq_depth << "\n";
  o << "\n[sim]\n";
  o << "seed = " << seed << "\n";
  char tb[32];
  auto res = std::to_chars(tb, tb + sizeof tb, t_block);
  o << "t_block = " << std::string_view(tb, static_cast<std::size_t>(res.ptr - tb)) << "\n";
  o << "attack_demo = " << (attack_demo ? "true" : "false") << "\n";
  if (!faults.empty() || !zero_macs.empty()) {
    o << "\n[faults]\n";
    if (!faults.empty()) {
      o << "corrupt = ";
      for (std::size_t i = 0; i < faults.size(); ++i) o << (i ? ", " : "") << format_corruption(faults[i]);
      o << "\n";
    }
    if (!zero_macs.empty()) {
      o << "zero_mac = ";
      for (std::size_t i = 0; i < zero_macs.size(); ++i)
        o << (i ? ", " : "") << zero_macs[i].first << ":" << zero_macs[i].second;
      o << "\n";
    }
  }
  return o.str();
}

SimConfig SimConfig::parse(std::string_view text) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  std::istringstream in{std::string(text)};
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }

  static const std::map<std::string, std::set<std::string>> known = {
      {"memory", {"capacity", "ratio", "persistent_start"}},
      {"policy", {"mode", "pin_top"}},
      {"cache", {"counter_bytes", "mt_bytes", "ways"}},
      {"wpq", {"depth"}},
      {"sim", {"seed", "t_block", "attack_demo"}},
      {"faults", {"corrupt", "zero_mac"}},
  };

  SimConfig c;
  for (const auto& [section, body] : tree) {
    auto it = known.find(section);
    if (it == known.end()) {
      if (body.empty()) throw ConfigError("config: key '" + section + "' outside any section");
      throw ConfigError("config: unknown section [" + section + "]");
    }
    for (const auto& [key, node] : body) {
      if (!it->second.count(key)) throw ConfigError("config: unknown key '" + key + "' in [" + section + "]");
      std::string v = trim(node.get_value<std::string>());
      std::string what = section + "." + key;
      if (what == "memory.capacity") c.capacity = parse_size(v);
      else if (what == "memory.ratio") c.ratio = Ratio::parse(v);
      else if (what == "memory.persistent_start") c.persistent_start = parse_size(v);
      else if (what == "policy.mode") {
        bool pin = c.policy.pin_top;
        c.policy = PersistPolicy::parse(v);
        c.policy.pin_top = pin;
      } else if (what == "policy.pin_top") c.policy.pin_top = parse_bool(v, what);
      else if (what == "cache.counter_bytes") c.counter_cache_bytes = parse_size(v);
      else if (what == "cache.mt_bytes") c.mt_cache_bytes = parse_size(v);
      else if (what == "cache.ways") c.cache_ways = static_cast<unsigned>(parse_u64(v, what));
      else if (what == "wpq.depth") c.wpq_depth = parse_u64(v, what);
      else if (what == "sim.seed") c.seed = parse_u64(v, what);
      else if (what == "sim.t_block") c.t_block = parse_double(v, what);
      else if (what == "sim.attack_demo") c.attack_demo = parse_bool(v, what);
      else if (what == "faults.corrupt") {
        for (const auto& item : split_list(v)) c.faults.push_back(parse_corruption(item));
      } else if (what == "faults.zero_mac") {
        for (const auto& item : split_list(v)) {
          auto colon = item.find(':');
          if (colon == std::string::npos) throw ConfigError("zero_mac entry '" + item + "' must be counter:count");
          c.zero_macs.emplace_back(parse_u64(item.substr(0, colon), what),
                                   static_cast<unsigned>(parse_u64(item.substr(colon + 1), what)));
        }
      }
    }
  }
  return c;
}

SimConfig SimConfig::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

}  // namespace triad
