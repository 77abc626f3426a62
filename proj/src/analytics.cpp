#include "triad/analytics.hpp"

#include <atomic>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <sstream>
#include <thread>

#include "triad/controller.hpp"
#include "triad/recovery.hpp"
#include "triad/workload.hpp"

namespace triad {

int parse_tier(std::string_view text) {
  std::string t(text);
  for (auto& ch : t) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  if (t == "data") return kTierData;
  if (t == "counters" || t == "counter" || t == "l0") return kTierCounters;
  if (t.size() >= 2 && t[0] == 'l') {
    unsigned v = 0;
    auto r = std::from_chars(t.data() + 1, t.data() + t.size(), v);
    if (r.ec == std::errc{} && r.ptr == t.data() + t.size() && v >= 1 && v <= 64) return static_cast<int>(v);
  }
  throw ConfigError("unknown tier '" + std::string(text) + "' (data, counters, l1, l2, ...)");
}

std::uint64_t recovery_block_count(const TreeGeometry& geom, int lowest_tier,
                                   const std::array<Region, kArity>& slot_classes, RecoveryScope scope) {
  const unsigned H = geom.levels();
  if (lowest_tier < kTierData || lowest_tier > static_cast<int>(H))
    throw ConfigError("tier " + tier_name(lowest_tier) + " is not in a tree with levels L1..L" + std::to_string(H));
  std::uint64_t n = 0;
  for (unsigned s = 0; s < geom.active_slots(); ++s) {
    if (scope == RecoveryScope::Persistent && slot_classes[s] != Region::Persistent) continue;
    if (scope == RecoveryScope::NonPersistent && slot_classes[s] != Region::NonPersistent) continue;
    unsigned from = static_cast<unsigned>(std::max(lowest_tier, 1));
    if (lowest_tier == kTierData) n += geom.count(0, s) * kBlocksPerPage;
    if (lowest_tier == kTierCounters) n += geom.count(0, s);
    for (unsigned t = from; t <= H; ++t) n += geom.count(t, s);
  }
  return n;
}

double analytic_recovery_time(std::uint64_t capacity, int lowest_tier, Ratio ratio, RecoveryScope scope,
                              double t_block) {
  if (capacity == 0) return 0.0;
  auto geom = TreeGeometry::for_capacity(capacity);
  auto map = RegionMap::make(capacity, ratio);
  std::array<Region, kArity> classes{};
  for (unsigned s = 0; s < kArity; ++s) classes[s] = map.slot_region(s, geom.slot_bytes());
  return static_cast<double>(recovery_block_count(geom, lowest_tier, classes, scope)) * t_block;
}

ReportFormat parse_format(std::string_view text) {
  if (text == "text" || text == "txt") return ReportFormat::Text;
  if (text == "csv") return ReportFormat::Csv;
  throw ConfigError("unknown report format '" + std::string(text) + "' (text, csv)");
}

namespace {

std::string fixed(double v, int prec) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", prec, v);
  return buf;
}

std::string node_levels(const WriteTally& t, const char* sep) {
  std::string out;
  for (std::size_t l = 1; l < t.node.size(); ++l) {
    if (l > 1) out += sep;
    out += std::to_string(t.node[l]);
  }
  return out;
}

}  // namespace

std::string stats_csv_header() {
  return "workload,policy,capacity,ratio,seed,ops,reads,writes,persistent_writes,nonpersistent_writes,"
         "nvm_data_writes,nvm_counter_writes,nvm_node_writes,nvm_recovery_writes,nvm_total_writes,"
         "node_writes_by_level,metadata_strict_writes,metadata_writeback_writes,nvm_reads,counter_hits,"
         "counter_misses,mt_hits,mt_misses,wpq_enqueues,wpq_stalls,latency_ns,page_reencryptions,"
         "zero_mac_reencrypts,lazy_counter_inits,pads_issued,pad_duplicates,crashes,recoveries,state_hash";
}

std::string stats_csv_row(const RunStats& s, const SimConfig& cfg, std::uint64_t state_hash,
                          std::string_view workload) {
  const auto& w = s.nvm_writes;
  std::ostringstream o;
  o << workload << ',' << cfg.policy.str() << ',' << format_size(cfg.capacity) << ',' << cfg.ratio.str() << ','
    << cfg.seed << ',' << s.ops << ',' << s.reads << ',' << s.writes << ',' << s.persistent_writes << ','
    << s.nonpersistent_writes << ',' << w.data << ',' << w.counter << ',' << w.nodes_total() << ','
    << w.recovery << ',' << w.total() << ',' << node_levels(w, ";") << ',' << w.strict_metadata << ','
    << w.writeback_metadata << ',' << s.nvm_reads << ',' << s.counter_cache_hits << ','
    << s.counter_cache_misses << ',' << s.mt_cache_hits << ',' << s.mt_cache_misses << ',' << s.wpq_enqueues
    << ',' << s.wpq_stalls << ',' << fixed(s.latency_ns, 1) << ',' << s.page_reencryptions << ','
    << s.zero_mac_reencrypts << ',' << s.lazy_counter_inits << ',' << s.pads_issued << ',' << s.pad_duplicates
    << ',' << s.crashes << ',' << s.recoveries << ',' << hex64(state_hash);
  return o.str();
}

std::string emit_report(const RunStats& s, ReportFormat format, const SimConfig& cfg, std::uint64_t state_hash,
                        std::string_view workload) {
  if (format == ReportFormat::Csv) return stats_csv_header() + "\n" + stats_csv_row(s, cfg, state_hash, workload) + "\n";
  const auto& w = s.nvm_writes;
  std::ostringstream o;
  o << "# config\n" << cfg.echo() << "\n# run\n";
  if (!workload.empty()) o << "workload              " << workload << "\n";
  o << "ops                   " << s.ops << " (" << s.reads << " reads, " << s.writes << " writes; "
    << s.persistent_writes << " persistent, " << s.nonpersistent_writes << " non-persistent)\n";
  o << "nvm writes            " << w.total() << "\n";
  o << "  data                " << w.data << "\n";
  o << "  counter             " << w.counter << "\n";
  for (std::size_t l = 1; l < w.node.size(); ++l) {
    std::string label = "  L" + std::to_string(l);
    o << label << std::string(22 - label.size(), ' ') << w.node[l] << "\n";
  }
  o << "  recovery            " << w.recovery << "\n";
  o << "metadata strict       " << w.strict_metadata << "\n";
  o << "metadata write-back   " << w.writeback_metadata << "\n";
  o << "nvm reads             " << s.nvm_reads << "\n";
  o << "counter cache         " << s.counter_cache_hits << " hits, " << s.counter_cache_misses << " misses\n";
  o << "tree cache            " << s.mt_cache_hits << " hits, " << s.mt_cache_misses << " misses\n";
  o << "wpq                   " << s.wpq_enqueues << " enqueues, " << s.wpq_stalls << " stalls\n";
  o << "latency               " << fixed(s.latency_ns, 1) << " ns\n";
  o << "page re-encryptions   " << s.page_reencryptions << "\n";
  o << "zero-MAC re-encrypts  " << s.zero_mac_reencrypts << "\n";
  o << "lazy counter inits    " << s.lazy_counter_inits << "\n";
  o << "pads issued           " << s.pads_issued << " (" << s.pad_duplicates << " duplicates)\n";
  o << "crashes/recoveries    " << s.crashes << "/" << s.recoveries << "\n";
  o << "state hash            " << hex64(state_hash) << "\n";
  return o.str();
}

RunStats run_scenario(const SimConfig& cfg, const std::string& name, std::size_t ops, std::uint64_t* state_hash) {
  Controller c(cfg);
  Trace trace = scenario(name, cfg.region_map(), cfg.seed, ops);
  for (const auto& op : trace) {
    if (op.kind == OpKind::Read)
      c.read(Address{op.addr});
    else
      c.write(Address{op.addr}, op.payload());
  }
  c.finish();
  if (state_hash) *state_hash = c.devices().durable_hash();
  return c.stats();
}

std::string sweep_csv(const SweepSpec& spec, unsigned jobs) {
  struct Cell {
    SimConfig cfg;
    std::string scenario;
    std::string row;
    std::string error;
  };
  std::vector<Cell> cells;
  for (const auto& p : spec.policies)
    for (auto cap : spec.capacities)
      for (const auto& sc : spec.scenarios) {
        Cell c{spec.base, sc, {}, {}};
        c.cfg.policy = p;
        c.cfg.capacity = cap;
        c.cfg.faults.clear();
        c.cfg.validate();
        cells.push_back(std::move(c));
      }
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k; (k = next.fetch_add(1)) < cells.size();) {
      auto& c = cells[k];
      try {
        std::uint64_t h = 0;
        RunStats s = run_scenario(c.cfg, c.scenario, spec.ops, &h);
        c.row = stats_csv_row(s, c.cfg, h, c.scenario);
      } catch (const std::exception& e) {
        c.error = e.what();
      }
    }
  };
  jobs = std::max(1u, jobs);
  std::vector<std::thread> pool;
  for (unsigned j = 1; j < jobs && j < cells.size(); ++j) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  std::string out = stats_csv_header() + "\n";
  for (const auto& c : cells) {
    if (!c.error.empty()) throw ConfigError("sweep cell " + c.cfg.policy.str() + "/" + format_size(c.cfg.capacity) + "/" + c.scenario + ": " + c.error);
    out += c.row + "\n";
  }
  return out;
}

}  // namespace triad
