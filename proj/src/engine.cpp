#include "isrlab/engine.hpp"

#include <algorithm>

#include "isrlab/container.hpp"

namespace isrlab::exec {

using isa::Mnemonic;

std::string_view outcome_name(Outcome o) {
  switch (o) {
    case Outcome::Halt: return "halt";
    case Outcome::IntegrityFault: return "integrity-fault";
    case Outcome::StepLimit: return "step-limit";
    case Outcome::MemoryFault: return "memory-fault";
  }
  return "?";
}

// ---- Memory ---------------------------------------------------------------

void Memory::map(Addr base, std::vector<std::uint8_t> bytes, bool writable) {
  if (bytes.empty()) return;
  Region r;
  r.base = base;
  r.dirty.assign(bytes.size(), false);
  r.bytes = std::move(bytes);
  r.writable = writable;
  regions_.push_back(std::move(r));
  std::sort(regions_.begin(), regions_.end(), [](const Region& a, const Region& b) { return a.base < b.base; });
}

const Memory::Region* Memory::find(Addr addr, std::uint32_t size) const {
  for (const auto& r : regions_) {
    if (addr >= r.base && std::uint64_t{addr} - r.base + size <= r.bytes.size()) return &r;
  }
  return nullptr;
}

Memory::Region* Memory::find(Addr addr, std::uint32_t size) {
  return const_cast<Region*>(std::as_const(*this).find(addr, size));
}

bool Memory::mapped(Addr addr, std::uint32_t size) const { return find(addr, size) != nullptr; }

bool Memory::writable(Addr addr, std::uint32_t size) const {
  const Region* r = find(addr, size);
  return r != nullptr && r->writable;
}

std::optional<std::uint32_t> Memory::read32(Addr addr) const {
  const Region* r = find(addr, 4);
  if (r == nullptr) return std::nullopt;
  const std::size_t o = addr - r->base;
  return static_cast<std::uint32_t>(r->bytes[o]) | static_cast<std::uint32_t>(r->bytes[o + 1]) << 8 |
         static_cast<std::uint32_t>(r->bytes[o + 2]) << 16 |
         static_cast<std::uint32_t>(r->bytes[o + 3]) << 24;
}

bool Memory::write32(Addr addr, std::uint32_t value) {
  Region* r = find(addr, 4);
  if (r == nullptr || !r->writable) return false;
  const std::size_t o = addr - r->base;
  for (int i = 0; i < 4; ++i) {
    r->bytes[o + i] = static_cast<std::uint8_t>(value >> (8 * i));
    r->dirty[o + i] = true;
  }
  return true;
}

bool Memory::poke(Addr addr, std::span<const std::uint8_t> bytes) {
  Region* r = find(addr, static_cast<std::uint32_t>(bytes.size()));
  if (r == nullptr) return false;
  const std::size_t o = addr - r->base;
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    r->bytes[o + i] = bytes[i];
    r->dirty[o + i] = true;
  }
  return true;
}

std::uint64_t Memory::digest(std::uint64_t h) const {
  for (const auto& r : regions_) {
    for (std::size_t i = 0; i < r.bytes.size(); ++i) {
      if (!r.dirty[i]) continue;
      const Addr a = r.base + static_cast<Addr>(i);
      const std::uint8_t rec[5] = {static_cast<std::uint8_t>(a), static_cast<std::uint8_t>(a >> 8),
                                   static_cast<std::uint8_t>(a >> 16), static_cast<std::uint8_t>(a >> 24),
                                   r.bytes[i]};
      h = fnv1a64(rec, h);
    }
  }
  return h;
}

// ---- Engine ---------------------------------------------------------------

Engine::Engine(const Image& image, Addr entry, bool encrypted, EngineOptions options)
    : options_(std::move(options)),
      encrypted_(encrypted),
      text_base_(image.text_base),
      text_len_(static_cast<std::uint32_t>(image.text.size())),
      cfg_(image.cfg),
      last_pc_(entry - 4) {
  for (const auto& b : cfg_.blocks) block_by_entry_.emplace(b.entry_addr, b.id);
  state_.mem.map(image.text_base, image.text, false);
  state_.mem.map(image.data_base, image.data, true);
  state_.mem.map(kStackTop - kStackSize, std::vector<std::uint8_t>(kStackSize, 0), true);
  state_.regs[2] = kStackTop;
  state_.pc = entry;
  set_block(cfg_.block_containing(entry));
  state_.cur_block_base = state_.cur_block ? cfg_.blocks[*state_.cur_block].entry_addr : entry;
}

Engine Engine::plaintext(const Image& image, Addr entry, EngineOptions options) {
  return Engine(image, entry, false, std::move(options));
}

Engine Engine::encrypted(const crypto::EncryptedImage& eimage, EngineOptions options) {
  Engine e(eimage.image, eimage.image.entry, true, std::move(options));
  for (const auto& p : eimage.patch_table) {
    e.patches_.insert_or_assign(patch_key(p.source_block, p.target_entry), p.patch);
  }
  e.patch_list_ = eimage.patch_table;
  e.state_.cur_key = eimage.entry_key;
  e.keystream_ = std::make_unique<crypto::Keystream>(eimage.entry_key);
  return e;
}

void Engine::set_block(std::optional<BlockId> id) {
  state_.cur_block = id;
  cur_block_len_ = id ? cfg_.blocks[*id].length_words : 0;
}

bool Engine::has_patch(BlockId source, Addr target) const {
  return patches_.contains(patch_key(source, target));
}

std::optional<crypto::Key128> Engine::patch(BlockId source, Addr target) const {
  auto it = patches_.find(patch_key(source, target));
  if (it == patches_.end()) return std::nullopt;
  return it->second;
}

void Engine::insert_patch(BlockId source, Addr target, const crypto::Key128& patch) {
  patches_.insert_or_assign(patch_key(source, target), patch);
  patch_list_.push_back({source, target, patch});
}

// Control enters `pc` by a transfer or a block-boundary fall-through.
void Engine::enter(Addr pc) {
  auto& c = state_.counters;
  ++c.control_transfers;
  if (!encrypted_) {
    set_block(cfg_.block_containing(pc));
    state_.cur_block_base = state_.cur_block ? cfg_.blocks[*state_.cur_block].entry_addr : pc;
    return;
  }
  ++c.patch_lookups;
  if (!state_.cur_block) return;
  auto it = patches_.find(patch_key(*state_.cur_block, pc));
  // No record for this edge: the key register and block base stay stale.
  if (it == patches_.end()) return;
  ++c.key_switches;
  state_.cur_key = crypto::derive_next_key(state_.cur_key, it->second);
  state_.cur_block_base = pc;
  auto b = block_by_entry_.find(pc);
  set_block(b == block_by_entry_.end() ? std::nullopt : std::optional<BlockId>(b->second));
  keystream_ = std::make_unique<crypto::Keystream>(state_.cur_key);
}

bool Engine::step() {
  if (stopped()) return false;
  auto& s = state_;
  auto& c = s.counters;
  const Addr pc = s.pc;

  const bool redirected = pc != last_pc_ + 4;
  const bool crossed = !redirected && cur_block_len_ != 0 && pc == s.cur_block_base + 4 * cur_block_len_;
  if (redirected || crossed) enter(pc);

  const auto fetched = (pc & 3) == 0 ? s.mem.read32(pc) : std::nullopt;
  if (!fetched) {
    stop(Outcome::MemoryFault);
    memory_fault_addr_ = pc;
    return true;
  }
  std::uint32_t word = *fetched;
  if (encrypted_) {
    ++c.keystream_invocations;
    word ^= keystream_->word((pc - s.cur_block_base) >> 2);
  }
  const auto decoded = isa::decode(isa::InstructionWord{word});
  const auto* instr = std::get_if<isa::Instruction>(&decoded);
  if (instr == nullptr || (options_.admit && !options_.admit(word))) {
    fault_pc_ = pc;
    fault_word_ = isa::InstructionWord{word};
    stop(Outcome::IntegrityFault);
    return true;
  }

  const isa::Instruction in = *instr;
  auto& x = s.regs;
  const std::uint32_t a = x[in.rs1];
  const std::uint32_t b = x[in.rs2];
  const auto imm = static_cast<std::uint32_t>(in.imm);
  const auto sa = static_cast<std::int32_t>(a);
  const auto sb = static_cast<std::int32_t>(b);
  Addr next = pc + 4;
  std::uint32_t result = 0;
  bool writes_rd = true;

  switch (in.op) {
    case Mnemonic::ADD: result = a + b; break;
    case Mnemonic::SUB: result = a - b; break;
    case Mnemonic::AND: result = a & b; break;
    case Mnemonic::OR: result = a | b; break;
    case Mnemonic::XOR: result = a ^ b; break;
    case Mnemonic::SLT: result = sa < sb ? 1 : 0; break;
    case Mnemonic::ADDI: result = a + imm; break;
    case Mnemonic::ANDI: result = a & imm; break;
    case Mnemonic::ORI: result = a | imm; break;
    case Mnemonic::XORI: result = a ^ imm; break;
    case Mnemonic::SLTI: result = sa < in.imm ? 1 : 0; break;
    case Mnemonic::LUI: result = imm << 12; break;
    case Mnemonic::LW: {
      const Addr ea = a + imm;
      const auto v = (ea & 3) == 0 ? s.mem.read32(ea) : std::nullopt;
      if (!v) {
        memory_fault_addr_ = ea;
        stop(Outcome::MemoryFault);
        return true;
      }
      result = *v;
      break;
    }
    case Mnemonic::SW: {
      const Addr ea = a + imm;
      writes_rd = false;
      if ((ea & 3) != 0 || !s.mem.write32(ea, b)) {
        memory_fault_addr_ = ea;
        stop(Outcome::MemoryFault);
        return true;
      }
      if (options_.on_store) options_.on_store(ea, b);
      break;
    }
    case Mnemonic::BEQ: writes_rd = false; if (a == b) next = pc + imm; break;
    case Mnemonic::BNE: writes_rd = false; if (a != b) next = pc + imm; break;
    case Mnemonic::BLT: writes_rd = false; if (sa < sb) next = pc + imm; break;
    case Mnemonic::BGE: writes_rd = false; if (sa >= sb) next = pc + imm; break;
    case Mnemonic::JAL: result = pc + 4; next = pc + imm; break;
    case Mnemonic::JALR: result = pc + 4; next = (a + imm) & ~1u; break;
    case Mnemonic::ECALL: writes_rd = false; break;
  }
  if (writes_rd && in.rd != 0) x[in.rd] = result;
  x[0] = 0;

  ++c.instructions_retired;
  if (options_.record_trace) trace_.push_back({pc, in});
  last_pc_ = pc;
  s.pc = next;
  if (in.op == Mnemonic::ECALL) {
    s.halted = true;
    stop(Outcome::Halt);
  }
  return true;
}

void Engine::run_until_retired(std::uint64_t retired) {
  while (!stopped() && state_.counters.instructions_retired < retired) step();
}

RunReport Engine::run(std::uint64_t step_limit) {
  run_until_retired(step_limit);
  return report();
}

RunReport Engine::report() const {
  RunReport r;
  r.outcome = outcome_.value_or(Outcome::StepLimit);
  if (r.outcome == Outcome::IntegrityFault) {
    r.fault_pc = fault_pc_;
    r.fault_word = fault_word_;
    r.instructions_until_fault = state_.counters.instructions_retired;
  }
  if (r.outcome == Outcome::MemoryFault) r.memory_fault_addr = memory_fault_addr_;
  r.regs = state_.regs;
  r.counters = state_.counters;
  std::uint8_t regbytes[32 * 4];
  for (std::size_t i = 0; i < 32; ++i) {
    for (std::size_t k = 0; k < 4; ++k) regbytes[i * 4 + k] = static_cast<std::uint8_t>(state_.regs[i] >> (8 * k));
  }
  r.digest = state_.mem.digest(fnv1a64(regbytes));
  return r;
}

// ---- Free functions ---------------------------------------------------------

RunReport run_plaintext(const Image& image, Addr entry, std::uint64_t step_limit) {
  return Engine::plaintext(image, entry).run(step_limit);
}

RunReport run_encrypted(const crypto::EncryptedImage& eimage, std::uint64_t step_limit) {
  return Engine::encrypted(eimage).run(step_limit);
}

std::vector<TraceEntry> trace(const Image& image, std::uint64_t step_limit) {
  EngineOptions o;
  o.record_trace = true;
  auto e = Engine::plaintext(image, image.entry, std::move(o));
  e.run(step_limit);
  return e.trace();
}

std::vector<TraceEntry> trace(const crypto::EncryptedImage& eimage, std::uint64_t step_limit) {
  EngineOptions o;
  o.record_trace = true;
  auto e = Engine::encrypted(eimage, std::move(o));
  e.run(step_limit);
  return e.trace();
}

double overhead_report(const RunReport& plain, const RunReport& enc, const CostModel& cost) {
  if (plain.outcome != Outcome::Halt || enc.outcome != Outcome::Halt) {
    throw ReportError("overhead needs two halted runs");
  }
  if (plain.counters.instructions_retired != enc.counters.instructions_retired) {
    throw ReportError("runs retired different instruction counts (" +
                      std::to_string(plain.counters.instructions_retired) + " vs " +
                      std::to_string(enc.counters.instructions_retired) + ")");
  }
  const auto p = static_cast<double>(plain.counters.cycles(cost));
  const auto e = static_cast<double>(enc.counters.cycles(cost));
  if (p == 0) throw ReportError("baseline run has zero cycles");
  return (e - p) / p;
}

}  // namespace isrlab::exec
