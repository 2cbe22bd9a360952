#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "isrlab/crypto.hpp"
#include "isrlab/isa.hpp"
#include "isrlab/program.hpp"

namespace isrlab::exec {

inline constexpr std::uint64_t kDefaultStepLimit = 1'000'000;

struct CostModel {
  std::uint64_t decrypt_cost = 0;
  std::uint64_t switch_cost = 0;
};

// control_transfers counts every point where execution enters a block other
// than by sequential flow inside one: taken branches, jumps, calls, returns,
// and sequential fall-through across a block boundary.
struct PerfCounters {
  std::uint64_t instructions_retired = 0;
  std::uint64_t control_transfers = 0;
  std::uint64_t key_switches = 0;
  std::uint64_t patch_lookups = 0;
  std::uint64_t keystream_invocations = 0;

  std::uint64_t cycles(const CostModel& cost) const {
    return instructions_retired + cost.decrypt_cost * keystream_invocations +
           cost.switch_cost * key_switches;
  }
  friend bool operator==(const PerfCounters&, const PerfCounters&) = default;
};

enum class Outcome : std::uint8_t { Halt, IntegrityFault, StepLimit, MemoryFault };

std::string_view outcome_name(Outcome o);

struct RunReport {
  Outcome outcome = Outcome::StepLimit;
  std::optional<Addr> fault_pc;                     // integrity faults only
  std::optional<isa::InstructionWord> fault_word;   // decrypted word that failed decode
  std::optional<std::uint64_t> instructions_until_fault;  // retired before the fault
  std::optional<Addr> memory_fault_addr;
  std::array<std::uint32_t, 32> regs{};
  std::uint64_t digest = 0;  // FNV-1a over registers and dirtied memory
  PerfCounters counters;

  friend bool operator==(const RunReport&, const RunReport&) = default;
};

struct TraceEntry {
  Addr pc = 0;
  isa::Instruction instr;
  friend bool operator==(const TraceEntry&, const TraceEntry&) = default;
};

struct EngineOptions {
  // Extra legality filter applied after a successful decode. Lets tests and
  // analyses substitute a stricter decoder.
  isa::LegalityFn admit;
  // Observes every architectural store (address, value) that succeeds.
  std::function<void(Addr, std::uint32_t)> on_store;
  bool record_trace = false;
};

class Memory {
 public:
  struct Region {
    Addr base = 0;
    std::vector<std::uint8_t> bytes;
    std::vector<bool> dirty;
    bool writable = false;
  };

  void map(Addr base, std::vector<std::uint8_t> bytes, bool writable);
  bool mapped(Addr addr, std::uint32_t size) const;
  bool writable(Addr addr, std::uint32_t size) const;
  std::optional<std::uint32_t> read32(Addr addr) const;
  /// Architectural store; fails on unmapped or read-only memory.
  bool write32(Addr addr, std::uint32_t value);
  /// Unchecked write into any mapped region (the attacker's primitive).
  bool poke(Addr addr, std::span<const std::uint8_t> bytes);
  std::uint64_t digest(std::uint64_t seed) const;
  const std::vector<Region>& regions() const { return regions_; }

 private:
  Region* find(Addr addr, std::uint32_t size);
  const Region* find(Addr addr, std::uint32_t size) const;
  std::vector<Region> regions_;
};

struct MachineState {
  std::array<std::uint32_t, 32> regs{};
  Memory mem;
  Addr pc = 0;
  crypto::BlockKey cur_key;
  Addr cur_block_base = 0;
  std::optional<BlockId> cur_block;
  bool halted = false;
  PerfCounters counters;
};

/// Fetch-decrypt-decode-execute interpreter. Plaintext mode skips
/// decryption and patch lookups but tracks blocks the same way.
class Engine {
 public:
  static Engine plaintext(const Image& image, Addr entry, EngineOptions options = {});
  static Engine encrypted(const crypto::EncryptedImage& eimage, EngineOptions options = {});

  /// One fetch/decode/execute. Returns false if the machine had already stopped.
  bool step();
  /// Runs until stopped or until `step_limit` instructions have retired in total.
  RunReport run(std::uint64_t step_limit);
  /// Runs until `retired` instructions have retired or the machine stops.
  void run_until_retired(std::uint64_t retired);

  bool stopped() const { return outcome_.has_value(); }
  std::optional<Outcome> outcome() const { return outcome_; }
  RunReport report() const;

  const MachineState& state() const { return state_; }
  const std::vector<TraceEntry>& trace() const { return trace_; }
  bool is_encrypted() const { return encrypted_; }
  const ControlFlowGraph& cfg() const { return cfg_; }
  bool has_patch(BlockId source, Addr target) const;
  std::optional<crypto::Key128> patch(BlockId source, Addr target) const;
  const std::vector<crypto::EdgePatch>& patch_table() const { return patch_list_; }
  Addr text_base() const { return text_base_; }
  std::uint32_t text_bytes() const { return text_len_; }

  // Attacker primitives.
  void set_pc(Addr pc) { state_.pc = pc; }
  bool poke(Addr addr, std::span<const std::uint8_t> bytes) { return state_.mem.poke(addr, bytes); }
  void insert_patch(BlockId source, Addr target, const crypto::Key128& patch);

 private:
  Engine(const Image& image, Addr entry, bool encrypted, EngineOptions options);
  void enter(Addr pc);
  void set_block(std::optional<BlockId> id);
  void stop(Outcome o) { outcome_ = o; }

  static std::uint64_t patch_key(BlockId s, Addr t) { return std::uint64_t{s} << 32 | t; }

  EngineOptions options_;
  bool encrypted_;
  Addr text_base_;
  std::uint32_t text_len_;
  ControlFlowGraph cfg_;
  std::unordered_map<Addr, BlockId> block_by_entry_;
  std::unordered_map<std::uint64_t, crypto::Key128> patches_;
  std::vector<crypto::EdgePatch> patch_list_;
  std::unique_ptr<crypto::Keystream> keystream_;
  MachineState state_;
  std::uint32_t cur_block_len_ = 0;
  Addr last_pc_;
  std::optional<Outcome> outcome_;
  Addr fault_pc_ = 0;
  isa::InstructionWord fault_word_{};
  Addr memory_fault_addr_ = 0;
  std::vector<TraceEntry> trace_;
};

RunReport run_plaintext(const Image& image, Addr entry, std::uint64_t step_limit = kDefaultStepLimit);
RunReport run_encrypted(const crypto::EncryptedImage& eimage, std::uint64_t step_limit = kDefaultStepLimit);

std::vector<TraceEntry> trace(const Image& image, std::uint64_t step_limit = kDefaultStepLimit);
std::vector<TraceEntry> trace(const crypto::EncryptedImage& eimage,
                              std::uint64_t step_limit = kDefaultStepLimit);

class ReportError : public Error {
 public:
  using Error::Error;
};

/// (enc.cycles - plain.cycles) / plain.cycles. Both runs must have halted
/// after retiring the same number of instructions.
double overhead_report(const RunReport& plain, const RunReport& enc, const CostModel& cost);

}  // namespace isrlab::exec
