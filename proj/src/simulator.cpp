#include "triad/simulator.hpp"

namespace triad {

ReplayFailure::ReplayFailure(const IntegrityViolation& cause, std::size_t position)
    : IntegrityViolation(cause), position_(position) {}

Simulator::Simulator(const SimConfig& cfg) : ctl_(std::make_unique<Controller>(cfg)) {}

void Simulator::write(std::uint64_t addr, const Block64& plaintext) { ctl_->write(Address{addr}, plaintext); }

Block64 Simulator::read(std::uint64_t addr) { return ctl_->read(Address{addr}); }

Block64 Simulator::apply(const TraceOp& op) {
  if (op.kind == OpKind::Read) return read(op.addr);
  Block64 p = op.payload();
  write(op.addr, p);
  return p;
}

void Simulator::replay(const Trace& trace, std::size_t from) {
  for (std::size_t i = from; i < trace.size(); ++i) {
    try {
      apply(trace[i]);
    } catch (const ReplayFailure&) {
      throw;
    } catch (const IntegrityViolation& e) {
      throw ReplayFailure(e, i);
    }
  }
}

void Simulator::crash() {
  ctl_->crash();
  ctl_->faults().apply(ctl_->devices().nvm);
}

RecoveryReport Simulator::recover() { return triad::recover(*ctl_); }

}  // namespace triad
