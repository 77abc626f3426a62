#include "triad/workload.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <sstream>

#include "triad/crypto.hpp"

namespace triad {

Block64 TraceOp::payload() const { return expand_payload(seed); }

TraceParseError::TraceParseError(std::size_t line, const std::string& msg)
    : ConfigError("trace line " + std::to_string(line) + ": " + msg), line_(line) {}

namespace {

bool parse_hex(std::string_view tok, std::uint64_t& out) {
  if (tok.size() > 2 && tok[0] == '0' && (tok[1] == 'x' || tok[1] == 'X')) tok.remove_prefix(2);
  if (tok.empty() || tok.size() > 16) return false;
  auto r = std::from_chars(tok.data(), tok.data() + tok.size(), out, 16);
  return r.ec == std::errc{} && r.ptr == tok.data() + tok.size();
}

}  // namespace

Trace parse_trace(std::istream& in) {
  Trace out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::istringstream ls(line);
    std::string kind, addr, seed, extra;
    if (!(ls >> kind)) continue;
    TraceOp op;
    if (kind == "R" || kind == "r") {
      op.kind = OpKind::Read;
      if (!(ls >> addr)) throw TraceParseError(lineno, "read needs an address");
    } else if (kind == "W" || kind == "w") {
      op.kind = OpKind::Write;
      if (!(ls >> addr >> seed)) throw TraceParseError(lineno, "write needs an address and a payload seed");
      if (!parse_hex(seed, op.seed)) throw TraceParseError(lineno, "bad payload seed '" + seed + "'");
    } else {
      throw TraceParseError(lineno, "unknown op '" + kind + "' (expected R or W)");
    }
    if (!parse_hex(addr, op.addr)) throw TraceParseError(lineno, "bad hex address '" + addr + "'");
    if (ls >> extra) throw TraceParseError(lineno, "trailing text '" + extra + "'");
    out.push_back(op);
  }
  return out;
}

Trace parse_trace_text(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_trace(in);
}

Trace load_trace(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open trace file '" + path + "'");
  return parse_trace(in);
}

std::string format_trace(const Trace& trace) {
  std::string out;
  char buf[64];
  for (const auto& op : trace) {
    if (op.kind == OpKind::Read)
      std::snprintf(buf, sizeof buf, "R 0x%llx\n", static_cast<unsigned long long>(op.addr));
    else
      std::snprintf(buf, sizeof buf, "W 0x%llx %016llx\n", static_cast<unsigned long long>(op.addr),
                    static_cast<unsigned long long>(op.seed));
    out += buf;
  }
  return out;
}

std::vector<TraceIssue> validate_trace(const Trace& trace, const RegionMap& map) {
  std::vector<TraceIssue> issues;
  for (std::size_t i = 0; i < trace.size(); ++i) {
    const auto& op = trace[i];
    if (op.addr >= map.capacity())
      issues.push_back({i, "address " + hex64(op.addr) + " beyond capacity " + format_size(map.capacity())});
    else if (op.addr % kBlockSize != 0)
      issues.push_back({i, "address " + hex64(op.addr) + " is not 64B aligned"});
  }
  return issues;
}

std::string_view to_string(SpecRegion r) {
  switch (r) {
    case SpecRegion::Persistent: return "persistent";
    case SpecRegion::NonPersistent: return "nonpersistent";
    case SpecRegion::Mixed: return "mixed";
  }
  return "?";
}

SpecRegion parse_spec_region(std::string_view text) {
  if (text == "persistent" || text == "p") return SpecRegion::Persistent;
  if (text == "nonpersistent" || text == "np" || text == "volatile") return SpecRegion::NonPersistent;
  if (text == "mixed" || text == "mix") return SpecRegion::Mixed;
  throw ConfigError("unknown region '" + std::string(text) + "' (persistent, nonpersistent, mixed)");
}

namespace {

/// A region as a list of byte ranges addressed by a flat offset.
struct Ranges {
  std::vector<std::pair<std::uint64_t, std::uint64_t>> parts;  // start, len
  std::uint64_t total = 0;

  void add(std::uint64_t start, std::uint64_t len) {
    if (len == 0) return;
    parts.emplace_back(start, len);
    total += len;
  }
  std::uint64_t at(std::uint64_t off) const {
    for (const auto& [s, l] : parts) {
      if (off < l) return s + off;
      off -= l;
    }
    throw ContractViolation("region offset out of range");
  }
};

Ranges ranges_for(Region r, const RegionMap& map) {
  Ranges out;
  if (r == Region::Persistent) {
    out.add(map.persistent_start(), map.persistent_len());
  } else {
    out.add(0, map.persistent_start());
    std::uint64_t end = map.persistent_start() + map.persistent_len();
    out.add(end, map.capacity() - end);
  }
  return out;
}

class Stream {
 public:
  Stream(Region r, const SyntheticSpec& spec, const RegionMap& map, std::uint64_t salt)
      : ranges_(ranges_for(r, map)), spec_(spec), rng_(spec.seed ^ salt) {
    if (ranges_.total == 0)
      throw ConfigError(std::string("ratio ") + map.ratio().str() + " leaves no " +
                        std::string(to_string(r)) + " region to generate into");
    span_ = spec.span ? spec.span : ranges_.total;
    if (span_ > ranges_.total) throw ConfigError("span exceeds the region size");
    span_ -= span_ % kBlockSize;
    if (span_ == 0) throw ConfigError("span smaller than one block");
  }

  void group(Trace& out, std::size_t limit) {
    if (out.size() >= limit) return;
    out.push_back({OpKind::Write, addr_of(writes_), splitmix64(rng_)});
    for (unsigned j = 0; j < spec_.rw_ratio && out.size() < limit; ++j)
      out.push_back({OpKind::Read, addr_of(writes_ >= j ? writes_ - j : 0), 0});
    ++writes_;
  }

 private:
  std::uint64_t addr_of(std::uint64_t k) const {
    // Wrap on the stride lattice so addresses stay block aligned.
    return ranges_.at((k * spec_.stride) % span_);
  }

  Ranges ranges_;
  const SyntheticSpec& spec_;
  std::uint64_t rng_;
  std::uint64_t span_ = 0;
  std::uint64_t writes_ = 0;
};

}  // namespace

Trace generate(const SyntheticSpec& spec, const RegionMap& map) {
  if (spec.stride == 0 || spec.stride % kBlockSize != 0)
    throw ConfigError("stride " + std::to_string(spec.stride) + " must be a nonzero multiple of 64B");
  Trace out;
  out.reserve(spec.op_count);
  if (spec.region == SpecRegion::Mixed) {
    Stream p(Region::Persistent, spec, map, 0x5045525349535421ULL);
    Stream n(Region::NonPersistent, spec, map, 0x564f4c4154494c45ULL);
    for (bool turn = false; out.size() < spec.op_count; turn = !turn) (turn ? n : p).group(out, spec.op_count);
  } else {
    Region r = spec.region == SpecRegion::Persistent ? Region::Persistent : Region::NonPersistent;
    Stream s(r, spec, map, 0);
    while (out.size() < spec.op_count) s.group(out, spec.op_count);
  }
  return out;
}

std::vector<std::string> scenario_names() {
  return {"daxbench1", "daxbench2", "daxbench3", "daxbench4", "mix1",     "mix2",
          "mix3",      "mix4",      "pwrite",    "npstream",  "attack"};
}

Trace scenario(const std::string& name, const RegionMap& map, std::uint64_t seed, std::size_t ops) {
  auto make = [&](SpecRegion r, std::uint64_t stride, unsigned rw) {
    SyntheticSpec s;
    s.region = r;
    s.stride = stride;
    s.rw_ratio = rw;
    s.op_count = ops;
    s.seed = seed;
    return generate(s, map);
  };
  if (name == "daxbench1") return make(SpecRegion::Persistent, 128, 2);
  if (name == "daxbench2") return make(SpecRegion::Persistent, 1024, 2);
  if (name == "daxbench3") return make(SpecRegion::Persistent, 256, 2);
  if (name == "daxbench4") return make(SpecRegion::Persistent, 512, 3);
  if (name == "mix1") return make(SpecRegion::Mixed, 64, 2);
  if (name == "mix2") return make(SpecRegion::Mixed, 128, 1);
  if (name == "mix3") return make(SpecRegion::Mixed, 256, 3);
  if (name == "mix4") return make(SpecRegion::Mixed, 4096, 2);
  if (name == "pwrite") return make(SpecRegion::Persistent, 64, 0);
  if (name == "npstream") return make(SpecRegion::NonPersistent, 64, 1);
  if (name == "attack") {
    // Eight non-persistent blocks on distinct pages, rewritten round after
    // round so a crash between rounds puts a rewrite on the far side.
    Ranges np = ranges_for(Region::NonPersistent, map);
    if (np.total < 8 * kPageSize) throw ConfigError("attack scenario needs at least 32KB of non-persistent memory");
    std::uint64_t rng = seed;
    Trace out;
    while (out.size() < ops) {
      for (unsigned i = 0; i < 8 && out.size() < ops; ++i)
        out.push_back({OpKind::Write, np.at(i * kPageSize), splitmix64(rng)});
      for (unsigned i = 0; i < 8 && out.size() < ops; ++i) out.push_back({OpKind::Read, np.at(i * kPageSize), 0});
    }
    return out;
  }
  throw ConfigError("unknown scenario '" + name + "'");
}

}  // namespace triad
