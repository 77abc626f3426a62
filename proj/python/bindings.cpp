#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "triad/analytics.hpp"
#include "triad/crashtest.hpp"
#include "triad/simulator.hpp"
#include "triad/workload.hpp"

namespace py = pybind11;
using namespace triad;

namespace {

Block64 to_block(py::bytes b) {
  std::string s = b;
  if (s.size() != kBlockSize) throw py::value_error("payload must be exactly 64 bytes");
  Block64 out;
  std::copy(s.begin(), s.end(), out.begin());
  return out;
}

py::bytes from_block(const Block64& b) { return py::bytes(reinterpret_cast<const char*>(b.data()), b.size()); }

py::dict stats_dict(const RunStats& s) {
  py::dict d;
  d["ops"] = s.ops;
  d["reads"] = s.reads;
  d["writes"] = s.writes;
  d["persistent_writes"] = s.persistent_writes;
  d["nonpersistent_writes"] = s.nonpersistent_writes;
  d["nvm_data_writes"] = s.nvm_writes.data;
  d["nvm_counter_writes"] = s.nvm_writes.counter;
  d["nvm_node_writes"] = s.nvm_writes.nodes_total();
  d["nvm_recovery_writes"] = s.nvm_writes.recovery;
  d["nvm_total_writes"] = s.nvm_writes.total();
  d["metadata_strict_writes"] = s.nvm_writes.strict_metadata;
  d["metadata_writeback_writes"] = s.nvm_writes.writeback_metadata;
  d["nvm_reads"] = s.nvm_reads;
  d["wpq_stalls"] = s.wpq_stalls;
  d["latency_ns"] = s.latency_ns;
  d["pads_issued"] = s.pads_issued;
  d["pad_duplicates"] = s.pad_duplicates;
  d["crashes"] = s.crashes;
  d["recoveries"] = s.recoveries;
  return d;
}

SimConfig make_config(const std::string& capacity, const std::string& ratio, const std::string& policy,
                      std::uint64_t seed, bool attack_demo) {
  SimConfig cfg;
  cfg.capacity = parse_size(capacity);
  cfg.ratio = Ratio::parse(ratio);
  cfg.policy = PersistPolicy::parse(policy);
  cfg.seed = seed;
  cfg.attack_demo = attack_demo;
  cfg.validate();
  return cfg;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Secure NVM memory-controller simulator";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<IntegrityViolation>(m, "IntegrityViolation");

  py::class_<SimConfig>(m, "Config")
      .def(py::init(&make_config), py::arg("capacity") = "64MB", py::arg("ratio") = "4:4",
           py::arg("policy") = "triad:1", py::arg("seed") = 1, py::arg("attack_demo") = false)
      .def_static("parse", &SimConfig::parse)
      .def_static("load", &SimConfig::load_file)
      .def("echo", &SimConfig::echo)
      .def("add_fault", [](SimConfig& c, const std::string& spec) { c.faults.push_back(parse_corruption(spec)); })
      .def_property_readonly("capacity", [](const SimConfig& c) { return c.capacity; })
      .def_property_readonly("policy", [](const SimConfig& c) { return c.policy.str(); })
      .def_property_readonly("ratio", [](const SimConfig& c) { return c.ratio.str(); })
      .def_property_readonly("levels", [](const SimConfig& c) { return c.geometry().levels(); });

  py::class_<RecoveryReport>(m, "RecoveryReport")
      .def_property_readonly("outcome", [](const RecoveryReport& r) { return std::string(to_string(r.outcome)); })
      .def_readonly("simulated_work", &RecoveryReport::simulated_work)
      .def_readonly("lazy_init_work", &RecoveryReport::lazy_init_work)
      .def_readonly("np_blocks_touched", &RecoveryReport::np_blocks_touched)
      .def_readonly("wpq_drained", &RecoveryReport::wpq_drained)
      .def_readonly("record_replayed", &RecoveryReport::record_replayed)
      .def_property_readonly("wall_model_seconds", &RecoveryReport::wall_model_seconds)
      .def_property_readonly("unverifiable",
                             [](const RecoveryReport& r) {
                               std::vector<std::tuple<std::uint64_t, std::uint64_t, std::string>> out;
                               for (const auto& u : r.unverifiable) out.emplace_back(u.start, u.end, u.cause);
                               return out;
                             })
      .def("text", &RecoveryReport::text)
      .def("csv_row", &RecoveryReport::csv_row);

  py::class_<Simulator>(m, "Simulator")
      .def(py::init<const SimConfig&>())
      .def("write", [](Simulator& s, std::uint64_t addr, py::bytes b) { s.write(addr, to_block(b)); })
      .def("read", [](Simulator& s, std::uint64_t addr) { return from_block(s.read(addr)); })
      .def("replay", [](Simulator& s, const std::string& text) { s.replay(parse_trace_text(text)); },
           py::arg("trace_text"))
      .def("crash", &Simulator::crash)
      .def("recover", &Simulator::recover)
      .def("finish", &Simulator::finish)
      .def("state_hash", &Simulator::state_hash)
      .def("stats", [](const Simulator& s) { return stats_dict(s.stats()); })
      .def("report", [](const Simulator& s, const std::string& fmt) {
        return emit_report(s.stats(), parse_format(fmt), s.config(), s.state_hash());
      }, py::arg("format") = "text");

  m.def("payload", [](std::uint64_t seed) { return from_block(expand_payload(seed)); });
  m.def("scenario_names", &scenario_names);
  m.def("scenario", [](const std::string& name, const SimConfig& cfg, std::size_t ops) {
    return format_trace(scenario(name, cfg.region_map(), cfg.seed, ops));
  }, py::arg("name"), py::arg("config"), py::arg("ops") = 500);
  m.def("analytic_recovery_time",
        [](const std::string& capacity, const std::string& tier, double t_block) {
          return analytic_recovery_time(parse_size(capacity), parse_tier(tier), Ratio{8, 0}, RecoveryScope::All,
                                        t_block);
        },
        py::arg("capacity"), py::arg("tier"), py::arg("t_block") = 100e-9);
  m.def("crashtest",
        [](const SimConfig& cfg, const std::string& trace_text, const std::string& plan, unsigned jobs) {
          auto s = crash_test(cfg, parse_trace_text(trace_text), CrashPlan::parse(plan), jobs);
          py::dict d;
          d["points"] = s.points_total;
          d["run"] = s.results.size();
          d["violations"] = s.violation_count();
          d["passed"] = s.passed();
          d["text"] = s.text();
          return d;
        },
        py::arg("config"), py::arg("trace_text"), py::arg("plan") = "exhaustive", py::arg("jobs") = 1);
}
