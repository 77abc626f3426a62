#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "triad/address.hpp"
#include "triad/common.hpp"

namespace triad {

enum class OpKind { Read, Write };

/// One trace line: `R <hex-addr>` or `W <hex-addr> <16-hex seed>`.
struct TraceOp {
  OpKind kind = OpKind::Read;
  std::uint64_t addr = 0;
  std::uint64_t seed = 0;  // write payload seed

  Block64 payload() const;
  friend bool operator==(const TraceOp&, const TraceOp&) = default;
};

using Trace = std::vector<TraceOp>;

/// Malformed trace text; `line()` is 1-based.
class TraceParseError : public ConfigError {
 public:
  TraceParseError(std::size_t line, const std::string& msg);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

Trace parse_trace(std::istream& in);
Trace parse_trace_text(std::string_view text);
Trace load_trace(const std::string& path);
std::string format_trace(const Trace& trace);

struct TraceIssue {
  std::size_t position = 0;  // 0-based op index
  std::string message;
};

/// Checks every op against the configured address space.
std::vector<TraceIssue> validate_trace(const Trace& trace, const RegionMap& map);

enum class SpecRegion { Persistent, NonPersistent, Mixed };

std::string_view to_string(SpecRegion r);
SpecRegion parse_spec_region(std::string_view text);

/// Strided stream: each group is one write followed by `rw_ratio` reads of
/// the most recently written positions. Mixed alternates groups between a
/// persistent and a non-persistent stream.
struct SyntheticSpec {
  SpecRegion region = SpecRegion::Persistent;
  std::uint64_t stride = 64;
  unsigned rw_ratio = 2;
  std::size_t op_count = 500;
  std::uint64_t seed = 1;
  /// Bytes of the region the stream wraps within; 0 = whole region.
  std::uint64_t span = 0;
};

Trace generate(const SyntheticSpec& spec, const RegionMap& map);

/// Bundled scenarios: daxbench1..4, mix1..4, pwrite, npstream, attack.
std::vector<std::string> scenario_names();
Trace scenario(const std::string& name, const RegionMap& map, std::uint64_t seed, std::size_t ops = 500);

}  // namespace triad
