#pragma once

#include <cstdint>
#include <memory>

#include "triad/config.hpp"
#include "triad/controller.hpp"
#include "triad/recovery.hpp"
#include "triad/workload.hpp"

namespace triad {

/// Integrity violation raised while replaying a trace; carries the 0-based
/// op index.
class ReplayFailure : public IntegrityViolation {
 public:
  ReplayFailure(const IntegrityViolation& cause, std::size_t position);
  std::size_t position() const { return position_; }

 private:
  std::size_t position_;
};

/// Convenience wrapper around one controller instance.
class Simulator {
 public:
  explicit Simulator(const SimConfig& cfg);

  void write(std::uint64_t addr, const Block64& plaintext);
  Block64 read(std::uint64_t addr);
  /// Returns the read value for reads, the written payload for writes.
  Block64 apply(const TraceOp& op);
  /// Runs trace[from..]; wraps integrity violations in ReplayFailure.
  void replay(const Trace& trace, std::size_t from = 0);

  /// Power loss, then any configured NVM faults.
  void crash();
  RecoveryReport recover();
  void finish() { ctl_->finish(); }

  std::uint64_t state_hash() const { return ctl_->devices().durable_hash(); }
  RunStats stats() const { return ctl_->stats(); }

  Controller& controller() { return *ctl_; }
  const Controller& controller() const { return *ctl_; }
  const SimConfig& config() const { return ctl_->config(); }

 private:
  std::unique_ptr<Controller> ctl_;
};

}  // namespace triad
