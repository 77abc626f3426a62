// triadsim: command-line front end for the secure NVM controller simulator.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "triad/analytics.hpp"
#include "triad/config.hpp"
#include "triad/crashtest.hpp"
#include "triad/simulator.hpp"
#include "triad/workload.hpp"

namespace fs = std::filesystem;
using namespace triad;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitProperty = 3;
constexpr int kExitIntegrity = 4;

struct CommonOpts {
  std::string config;
  std::string trace;
  std::string scenario;
  std::size_t ops = 500;
  std::string policy;
  std::string capacity;
  std::string ratio;
  std::optional<std::uint64_t> seed;
  bool attack_demo = false;
  bool pin_top = false;
  std::string out;
  std::vector<std::string> faults;

  void add_config(CLI::App* app) {
    app->add_option("--config", config, "Config file (key=value with [sections])");
    app->add_option("--policy", policy, "strict | triad:P | none (append +pin to pin the top two levels)");
    app->add_option("--capacity", capacity, "Memory size, e.g. 64MB, 16GB");
    app->add_option("--ratio", ratio, "Persistent:non-persistent split in eighths, e.g. 4:4");
    app->add_option("--seed", seed, "Master seed for keys and synthetic traces");
    app->add_flag("--attack-demo", attack_demo, "Keep the volatile key across recoveries");
    app->add_flag("--pin-top", pin_top, "Keep the top two tree levels in persistent registers");
    app->add_option("--fault", faults, "Inject a bit flip at crash time: counter@P:BIT, data@ADDR:BIT, nodeT@I:BIT");
  }
  void add_workload(CLI::App* app) {
    app->add_option("--trace", trace, "Trace file (R <addr> / W <addr> <seed>)");
    app->add_option("--scenario", scenario, "Bundled synthetic workload")
        ->check(CLI::IsMember(scenario_names()));
    app->add_option("--ops", ops, "Ops for a synthetic scenario")->capture_default_str();
  }

  SimConfig build() const {
    SimConfig cfg = config.empty() ? SimConfig{} : SimConfig::load_file(config);
    if (!capacity.empty()) cfg.capacity = parse_size(capacity);
    if (!ratio.empty()) cfg.ratio = Ratio::parse(ratio);
    if (!policy.empty()) cfg.policy = PersistPolicy::parse(policy);
    if (pin_top) cfg.policy.pin_top = true;
    if (seed) cfg.seed = *seed;
    if (attack_demo) cfg.attack_demo = true;
    for (const auto& f : faults) cfg.faults.push_back(parse_corruption(f));
    cfg.validate();
    return cfg;
  }

  /// Workload name plus trace; requires exactly one of --trace/--scenario.
  std::pair<std::string, Trace> workload(const SimConfig& cfg) const {
    if (trace.empty() == scenario.empty()) throw ConfigError("give exactly one of --trace or --scenario");
    Trace t = trace.empty() ? triad::scenario(scenario, cfg.region_map(), cfg.seed, ops) : load_trace(trace);
    auto issues = validate_trace(t, cfg.region_map());
    if (!issues.empty())
      throw ConfigError("trace op " + std::to_string(issues.front().position) + ": " + issues.front().message);
    return {trace.empty() ? scenario : fs::path(trace).filename().string(), std::move(t)};
  }
};

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw ConfigError("cannot write '" + p.string() + "'");
  f << text;
}

fs::path out_dir(const std::string& out) {
  fs::path d(out);
  fs::create_directories(d);
  return d;
}

std::vector<std::string> split(const std::string& s, char sep = ',') {
  std::vector<std::string> out;
  std::stringstream in(s);
  for (std::string part; std::getline(in, part, sep);)
    if (!part.empty()) out.push_back(part);
  return out;
}

int cmd_run(const CommonOpts& o, const std::string& crash_at, const std::string& format) {
  SimConfig cfg = o.build();
  auto [name, trace] = o.workload(cfg);
  ReportFormat fmt = parse_format(format);
  Simulator sim(cfg);

  std::optional<std::uint64_t> crash_event;
  if (!crash_at.empty()) {
    auto plan = CrashPlan::parse(crash_at);
    if (plan.mode != CrashPlan::Mode::Single) throw ConfigError("run takes --crash-at <event-id>; use crashtest for " + crash_at);
    crash_event = plan.value;
  }
  std::optional<RecoveryReport> recovery;
  auto crash_and_recover = [&] {
    sim.crash();
    recovery = sim.recover();
  };

  std::size_t i = 0;
  if (crash_event) {
    if (*crash_event == 0) {
      crash_and_recover();
    } else {
      sim.controller().set_event_hook([&](const Event& e) {
        if (e.seq == *crash_event) throw CrashInjected(e.seq);
      });
      bool crashed = false;
      try {
        for (; i < trace.size(); ++i) sim.apply(trace[i]);
      } catch (const CrashInjected&) {
        crashed = true;
        ++i;
      }
      sim.controller().set_event_hook({});
      if (!crashed)
        throw ConfigError("crash point " + std::to_string(*crash_event) + " is beyond the trace's " +
                          std::to_string(sim.controller().event_count()) + " events");
      crash_and_recover();
    }
  }
  sim.replay(trace, i);
  if (!crash_event && !cfg.faults.empty()) crash_and_recover();
  sim.finish();

  std::string report = emit_report(sim.stats(), fmt, cfg, sim.state_hash(), name);
  std::string rec_text;
  if (recovery) rec_text = fmt == ReportFormat::Csv ? RecoveryReport::csv_header() + "\n" + recovery->csv_row() + "\n"
                                                    : "\n" + recovery->text();
  std::cout << report << rec_text;
  if (!o.out.empty()) {
    auto d = out_dir(o.out);
    write_file(d / "report.txt", emit_report(sim.stats(), ReportFormat::Text, cfg, sim.state_hash(), name));
    write_file(d / "stats.csv", emit_report(sim.stats(), ReportFormat::Csv, cfg, sim.state_hash(), name));
    write_file(d / "state_hash.txt", hex64(sim.state_hash()) + "\n");
    if (recovery) {
      write_file(d / "recovery.txt", recovery->text());
      write_file(d / "recovery.csv", RecoveryReport::csv_header() + "\n" + recovery->csv_row() + "\n");
    }
  }
  if (recovery && recovery->outcome == RecoveryOutcome::Failed) return kExitProperty;
  return kExitOk;
}

int cmd_crashtest(const CommonOpts& o, const std::string& crash_at, unsigned jobs) {
  SimConfig cfg = o.build();
  auto [name, trace] = o.workload(cfg);
  auto plan = CrashPlan::parse(crash_at.empty() ? "exhaustive" : crash_at);
  auto summary = crash_test(cfg, trace, plan, jobs);
  std::string text = "workload " + name + " (" + std::to_string(trace.size()) + " ops), plan " + plan.str() + "\n" +
                     summary.text();
  std::cout << text;
  if (!o.out.empty()) write_file(out_dir(o.out) / "crashtest.txt", text);
  return summary.passed() ? kExitOk : kExitProperty;
}

int cmd_model(const std::string& caps, const std::string& tiers, const std::string& ratio, const std::string& scope,
              double t_block, const std::string& out) {
  Ratio r = Ratio::parse(ratio);
  RecoveryScope sc = RecoveryScope::All;
  if (scope == "persistent")
    sc = RecoveryScope::Persistent;
  else if (scope == "nonpersistent")
    sc = RecoveryScope::NonPersistent;
  else if (scope != "all")
    throw ConfigError("unknown scope '" + scope + "' (all, persistent, nonpersistent)");
  std::ostringstream o;
  o << "capacity,capacity_bytes,tier,ratio,scope,blocks,seconds\n";
  for (const auto& c : split(caps)) {
    std::uint64_t bytes = parse_size(c);
    for (const auto& t : split(tiers)) {
      int tier = parse_tier(t);
      double secs = analytic_recovery_time(bytes, tier, r, sc, t_block);
      std::uint64_t blocks = bytes == 0 ? 0 : static_cast<std::uint64_t>(secs / t_block + 0.5);
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.6f", secs);
      o << (bytes ? format_size(bytes) : "0") << ',' << bytes << ',' << tier_name(tier) << ',' << r.str() << ','
        << scope << ',' << blocks << ',' << buf << '\n';
    }
  }
  std::cout << o.str();
  if (!out.empty()) write_file(out_dir(out) / "model.csv", o.str());
  return kExitOk;
}

int cmd_validate(const CommonOpts& o) {
  SimConfig cfg = o.build();
  std::cout << "config ok: " << format_size(cfg.capacity) << " " << cfg.ratio.str() << " " << cfg.policy.str()
            << " (" << cfg.geometry().levels() << " tree levels)\n";
  if (o.trace.empty()) return kExitOk;
  Trace t = load_trace(o.trace);
  auto issues = validate_trace(t, cfg.region_map());
  for (const auto& is : issues) std::cout << "op " << is.position << ": " << is.message << "\n";
  std::cout << "trace " << (issues.empty() ? "ok" : "invalid") << ": " << t.size() << " ops, " << issues.size()
            << " issues\n";
  return issues.empty() ? kExitOk : kExitConfig;
}

int cmd_gen(const CommonOpts& o, const std::string& region, std::uint64_t stride, unsigned rw,
            const std::string& span) {
  SimConfig cfg = o.build();
  Trace t;
  if (!o.scenario.empty()) {
    t = scenario(o.scenario, cfg.region_map(), cfg.seed, o.ops);
  } else {
    SyntheticSpec s;
    s.region = parse_spec_region(region);
    s.stride = stride;
    s.rw_ratio = rw;
    s.op_count = o.ops;
    s.seed = cfg.seed;
    s.span = span.empty() ? 0 : parse_size(span);
    t = generate(s, cfg.region_map());
  }
  std::string text = format_trace(t);
  if (o.out.empty())
    std::cout << text;
  else
    write_file(o.out, text);
  return kExitOk;
}

int cmd_sweep(const CommonOpts& o, const std::string& policies, const std::string& caps, const std::string& scenarios,
              unsigned jobs) {
  SweepSpec spec;
  spec.base = o.build();
  spec.ops = o.ops;
  for (const auto& p : split(policies)) spec.policies.push_back(PersistPolicy::parse(p));
  for (const auto& c : split(caps)) spec.capacities.push_back(parse_size(c));
  spec.scenarios = scenarios == "all" ? scenario_names() : split(scenarios);
  if (spec.policies.empty() || spec.capacities.empty() || spec.scenarios.empty())
    throw ConfigError("sweep needs at least one policy, capacity and scenario");
  std::string csv = sweep_csv(spec, jobs);
  std::cout << csv;
  if (!o.out.empty()) write_file(out_dir(o.out) / "sweep.csv", csv);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Secure NVM memory-controller simulator: counter-mode encryption, an 8-ary integrity tree, "
               "selective metadata persistence, crash injection and recovery.\n"
               "Exit codes: 0 ok, 2 config or trace error, 3 property violation, 4 integrity violation."};
  app.require_subcommand(1);
  app.set_version_flag("--version", "triadsim 0.1.0");

  CommonOpts o;
  std::string crash_at, format = "text", region = "persistent", span, scope = "all";
  std::string caps = "1TB", tiers = "data,counters,l1,l2", ratio_model = "8:0";
  std::string policies = "strict,triad:0,triad:1,triad:2,triad:3,none", scenarios = "all";
  std::uint64_t stride = 64;
  unsigned rw = 2, jobs = 1;
  double t_block = 100e-9;

  auto* run = app.add_subcommand("run", "Replay a trace or scenario and report statistics");
  o.add_config(run);
  o.add_workload(run);
  run->add_option("--crash-at", crash_at, "Crash after event <id>, recover, then finish the trace");
  run->add_option("--format", format, "text | csv")->capture_default_str();
  run->add_option("--out", o.out, "Directory for report.txt, stats.csv, state_hash.txt, recovery.*");

  auto* ct = app.add_subcommand("crashtest", "Crash at every (or sampled) event boundary, recover and check");
  o.add_config(ct);
  o.add_workload(ct);
  ct->add_option("--crash-at", crash_at, "exhaustive | random:N | <event-id> (default exhaustive)");
  ct->add_option("--jobs", jobs, "Worker threads")->capture_default_str();
  ct->add_option("--out", o.out, "Directory for crashtest.txt");

  auto* model = app.add_subcommand("model", "Analytic recovery time as CSV");
  model->add_option("--capacity", caps, "Comma-separated capacities")->capture_default_str();
  model->add_option("--tier", tiers, "Comma-separated lowest tiers: data, counters, l1, l2, ...")->capture_default_str();
  model->add_option("--ratio", ratio_model, "Region split for scoped estimates")->capture_default_str();
  model->add_option("--scope", scope, "all | persistent | nonpersistent")->capture_default_str();
  model->add_option("--t-block", t_block, "Seconds per 64B block read or hashed")->capture_default_str();
  model->add_option("--out", o.out, "Directory for model.csv");

  auto* val = app.add_subcommand("validate", "Check a config and optionally a trace against it");
  o.add_config(val);
  val->add_option("--trace", o.trace, "Trace file to check");

  auto* gen = app.add_subcommand("gen", "Generate a synthetic trace");
  o.add_config(gen);
  gen->add_option("--scenario", o.scenario, "Bundled scenario")->check(CLI::IsMember(scenario_names()));
  gen->add_option("--ops", o.ops, "Number of ops")->capture_default_str();
  gen->add_option("--region", region, "persistent | nonpersistent | mixed")->capture_default_str();
  gen->add_option("--stride", stride, "Bytes between consecutive writes")->capture_default_str();
  gen->add_option("--rw", rw, "Reads after each write")->capture_default_str();
  gen->add_option("--span", span, "Bytes of the region to wrap within (default whole region)");
  gen->add_option("--out", o.out, "Output file (default stdout)");

  auto* sweep = app.add_subcommand("sweep", "Run every (policy, capacity, scenario) cell and emit CSV");
  o.add_config(sweep);
  sweep->add_option("--policies", policies, "Comma-separated policies")->capture_default_str();
  sweep->add_option("--capacities", caps, "Comma-separated capacities (default 64MB)");
  sweep->add_option("--scenarios", scenarios, "Comma-separated scenarios or 'all'")->capture_default_str();
  sweep->add_option("--ops", o.ops, "Ops per cell")->capture_default_str();
  sweep->add_option("--jobs", jobs, "Worker threads")->capture_default_str();
  sweep->add_option("--out", o.out, "Directory for sweep.csv");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    if (*run) return cmd_run(o, crash_at, format);
    if (*ct) return cmd_crashtest(o, crash_at, jobs);
    if (*model) return cmd_model(caps, tiers, ratio_model, scope, t_block, o.out);
    if (*val) return cmd_validate(o);
    if (*gen) return cmd_gen(o, region, stride, rw, span);
    if (*sweep) {
      if (sweep->count("--capacities") == 0) caps = "64MB";
      return cmd_sweep(o, policies, caps, scenarios, jobs);
    }
  } catch (const ReplayFailure& e) {
    std::cerr << "integrity violation at op " << e.position() << ": " << e.what() << "\n";
    return kExitIntegrity;
  } catch (const IntegrityViolation& e) {
    std::cerr << "integrity violation: " << e.what() << "\n";
    return kExitIntegrity;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const AddressFault& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
  return kExitOk;
}
