#include "isrlab/isa.hpp"

#include <array>
#include <random>
#include <sstream>

namespace isrlab::isa {

namespace {

constexpr std::uint32_t kOpOp = 0b0110011;
constexpr std::uint32_t kOpImm = 0b0010011;
constexpr std::uint32_t kOpLui = 0b0110111;
constexpr std::uint32_t kOpLoad = 0b0000011;
constexpr std::uint32_t kOpStore = 0b0100011;
constexpr std::uint32_t kOpBranch = 0b1100011;
constexpr std::uint32_t kOpJal = 0b1101111;
constexpr std::uint32_t kOpJalr = 0b1100111;
constexpr std::uint32_t kOpSystem = 0b1110011;
constexpr std::uint32_t kEcallWord = 0x00000073;

struct OpInfo {
  Mnemonic op;
  std::string_view name;
  Format format;
  std::uint32_t opcode;
  std::uint32_t funct3;
  std::uint32_t funct7;
};

constexpr std::array<OpInfo, kMnemonicCount> kOps{{
    {Mnemonic::ADD, "add", Format::R, kOpOp, 0, 0x00},
    {Mnemonic::SUB, "sub", Format::R, kOpOp, 0, 0x20},
    {Mnemonic::AND, "and", Format::R, kOpOp, 7, 0x00},
    {Mnemonic::OR, "or", Format::R, kOpOp, 6, 0x00},
    {Mnemonic::XOR, "xor", Format::R, kOpOp, 4, 0x00},
    {Mnemonic::SLT, "slt", Format::R, kOpOp, 2, 0x00},
    {Mnemonic::ADDI, "addi", Format::I, kOpImm, 0, 0},
    {Mnemonic::ANDI, "andi", Format::I, kOpImm, 7, 0},
    {Mnemonic::ORI, "ori", Format::I, kOpImm, 6, 0},
    {Mnemonic::XORI, "xori", Format::I, kOpImm, 4, 0},
    {Mnemonic::SLTI, "slti", Format::I, kOpImm, 2, 0},
    {Mnemonic::LUI, "lui", Format::U, kOpLui, 0, 0},
    {Mnemonic::LW, "lw", Format::I, kOpLoad, 2, 0},
    {Mnemonic::SW, "sw", Format::S, kOpStore, 2, 0},
    {Mnemonic::BEQ, "beq", Format::B, kOpBranch, 0, 0},
    {Mnemonic::BNE, "bne", Format::B, kOpBranch, 1, 0},
    {Mnemonic::BLT, "blt", Format::B, kOpBranch, 4, 0},
    {Mnemonic::BGE, "bge", Format::B, kOpBranch, 5, 0},
    {Mnemonic::JAL, "jal", Format::J, kOpJal, 0, 0},
    {Mnemonic::JALR, "jalr", Format::I, kOpJalr, 0, 0},
    {Mnemonic::ECALL, "ecall", Format::Sys, kOpSystem, 0, 0},
}};

const OpInfo& info(Mnemonic m) { return kOps[static_cast<std::size_t>(m)]; }

constexpr std::int32_t sign_extend(std::uint32_t v, int bits) {
  const std::uint32_t m = 1u << (bits - 1);
  return static_cast<std::int32_t>((v ^ m) - m);
}

constexpr std::uint32_t field(std::uint32_t w, int lo, int width) {
  return (w >> lo) & ((1u << width) - 1u);
}

void check_reg(std::uint8_t r, const char* which) {
  if (r > 31) {
    throw EncodeError(std::string("register index out of range for ") + which + ": " +
                      std::to_string(r));
  }
}

void check_range(std::int64_t v, std::int64_t lo, std::int64_t hi, std::string_view what) {
  if (v < lo || v > hi) {
    std::ostringstream os;
    os << what << " immediate " << v << " outside [" << lo << ", " << hi << "]";
    throw EncodeError(os.str());
  }
}

// Mirrors the encoder: for each opcode, which funct3 values are accepted and
// what must hold of the remaining fields.
const OpInfo* lookup_r(std::uint32_t f3, std::uint32_t f7) {
  for (const auto& o : kOps) {
    if (o.format == Format::R && o.funct3 == f3 && o.funct7 == f7) return &o;
  }
  return nullptr;
}

const OpInfo* lookup_f3(std::uint32_t opcode, std::uint32_t f3) {
  for (const auto& o : kOps) {
    if (o.opcode == opcode && o.funct3 == f3 && o.format != Format::R) return &o;
  }
  return nullptr;
}

}  // namespace

Format format_of(Mnemonic m) { return info(m).format; }

std::string_view mnemonic_name(Mnemonic m) { return info(m).name; }

std::optional<Mnemonic> mnemonic_from_name(std::string_view name) {
  for (const auto& o : kOps) {
    if (o.name == name) return o.op;
  }
  return std::nullopt;
}

bool is_branch(Mnemonic m) { return format_of(m) == Format::B; }

bool is_terminator(Mnemonic m) {
  return is_branch(m) || m == Mnemonic::JAL || m == Mnemonic::JALR || m == Mnemonic::ECALL;
}

bool is_return(const Instruction& i) {
  return i.op == Mnemonic::JALR && i.rd == 0 && i.rs1 == 1 && i.imm == 0;
}

std::string_view reason_name(DecodeReason r) {
  switch (r) {
    case DecodeReason::UnknownOpcode: return "unknown-opcode";
    case DecodeReason::ReservedField: return "reserved-field";
    case DecodeReason::IllegalAllZero: return "illegal-all-zero";
    case DecodeReason::IllegalAllOnes: return "illegal-all-ones";
  }
  return "?";
}

std::string to_string(const Instruction& i) {
  std::ostringstream os;
  os << mnemonic_name(i.op);
  auto x = [](int r) { return "x" + std::to_string(r); };
  switch (format_of(i.op)) {
    case Format::R: os << ' ' << x(i.rd) << ", " << x(i.rs1) << ", " << x(i.rs2); break;
    case Format::I:
      if (i.op == Mnemonic::LW || i.op == Mnemonic::JALR) {
        os << ' ' << x(i.rd) << ", " << i.imm << '(' << x(i.rs1) << ')';
      } else {
        os << ' ' << x(i.rd) << ", " << x(i.rs1) << ", " << i.imm;
      }
      break;
    case Format::S: os << ' ' << x(i.rs2) << ", " << i.imm << '(' << x(i.rs1) << ')'; break;
    case Format::B: os << ' ' << x(i.rs1) << ", " << x(i.rs2) << ", " << i.imm; break;
    case Format::U: os << ' ' << x(i.rd) << ", 0x" << std::hex << i.imm << std::dec; break;
    case Format::J: os << ' ' << x(i.rd) << ", " << i.imm; break;
    case Format::Sys: break;
  }
  return os.str();
}

InstructionWord encode(const Instruction& in) {
  const OpInfo& o = info(in.op);
  check_reg(in.rd, "rd");
  check_reg(in.rs1, "rs1");
  check_reg(in.rs2, "rs2");
  const std::uint32_t rd = in.rd, rs1 = in.rs1, rs2 = in.rs2;
  std::uint32_t w = 0;
  switch (o.format) {
    case Format::R:
      w = (o.funct7 << 25) | (rs2 << 20) | (rs1 << 15) | (o.funct3 << 12) | (rd << 7) | o.opcode;
      break;
    case Format::I: {
      check_range(in.imm, -2048, 2047, mnemonic_name(in.op));
      const auto imm = static_cast<std::uint32_t>(in.imm) & 0xFFFu;
      w = (imm << 20) | (rs1 << 15) | (o.funct3 << 12) | (rd << 7) | o.opcode;
      break;
    }
    case Format::S: {
      check_range(in.imm, -2048, 2047, mnemonic_name(in.op));
      const auto imm = static_cast<std::uint32_t>(in.imm) & 0xFFFu;
      w = ((imm >> 5) << 25) | (rs2 << 20) | (rs1 << 15) | (o.funct3 << 12) |
          ((imm & 0x1F) << 7) | o.opcode;
      break;
    }
    case Format::B: {
      check_range(in.imm, -4096, 4092, mnemonic_name(in.op));
      if (in.imm % 4 != 0) throw EncodeError("branch offset must be a multiple of 4");
      const auto imm = static_cast<std::uint32_t>(in.imm);
      w = (field(imm, 12, 1) << 31) | (field(imm, 5, 6) << 25) | (rs2 << 20) | (rs1 << 15) |
          (o.funct3 << 12) | (field(imm, 1, 4) << 8) | (field(imm, 11, 1) << 7) | o.opcode;
      break;
    }
    case Format::U:
      check_range(in.imm, 0, 0xFFFFF, "lui");
      w = (static_cast<std::uint32_t>(in.imm) << 12) | (rd << 7) | o.opcode;
      break;
    case Format::J: {
      check_range(in.imm, -(1 << 20), (1 << 20) - 4, "jal");
      if (in.imm % 4 != 0) throw EncodeError("jump offset must be a multiple of 4");
      const auto imm = static_cast<std::uint32_t>(in.imm);
      w = (field(imm, 20, 1) << 31) | (field(imm, 1, 10) << 21) | (field(imm, 11, 1) << 20) |
          (field(imm, 12, 8) << 12) | (rd << 7) | o.opcode;
      break;
    }
    case Format::Sys: w = kEcallWord; break;
  }
  // Canonical form: unused fields must be zero, otherwise decode(encode(i)) != i.
  Instruction canon = in;
  switch (o.format) {
    case Format::R: canon.imm = 0; break;
    case Format::I: canon.rs2 = 0; break;
    case Format::S:
    case Format::B: canon.rd = 0; break;
    case Format::U:
    case Format::J: canon.rs1 = canon.rs2 = 0; break;
    case Format::Sys: canon = Instruction{Mnemonic::ECALL}; break;
  }
  if (!(canon == in)) throw EncodeError("operand not used by " + std::string(o.name) + " is nonzero");
  return InstructionWord{w};
}

DecodeResult decode(InstructionWord word) {
  const std::uint32_t w = word.bits;
  if (w == 0) return DecodeError{word, DecodeReason::IllegalAllZero};
  if (w == 0xFFFFFFFFu) return DecodeError{word, DecodeReason::IllegalAllOnes};

  const std::uint32_t opcode = field(w, 0, 7);
  const auto rd = static_cast<std::uint8_t>(field(w, 7, 5));
  const std::uint32_t f3 = field(w, 12, 3);
  const auto rs1 = static_cast<std::uint8_t>(field(w, 15, 5));
  const auto rs2 = static_cast<std::uint8_t>(field(w, 20, 5));
  const std::uint32_t f7 = field(w, 25, 7);
  const DecodeError reserved{word, DecodeReason::ReservedField};

  switch (opcode) {
    case kOpOp: {
      const OpInfo* o = lookup_r(f3, f7);
      if (o == nullptr) return reserved;
      return Instruction{o->op, rd, rs1, rs2, 0};
    }
    case kOpImm:
    case kOpLoad:
    case kOpJalr: {
      const OpInfo* o = lookup_f3(opcode, f3);
      if (o == nullptr) return reserved;
      return Instruction{o->op, rd, rs1, 0, sign_extend(field(w, 20, 12), 12)};
    }
    case kOpStore: {
      const OpInfo* o = lookup_f3(opcode, f3);
      if (o == nullptr) return reserved;
      const std::uint32_t imm = (f7 << 5) | field(w, 7, 5);
      return Instruction{o->op, 0, rs1, rs2, sign_extend(imm, 12)};
    }
    case kOpBranch: {
      const OpInfo* o = lookup_f3(opcode, f3);
      // imm[1] set would target a half-word address; no compressed
      // instructions exist, so the bit is reserved.
      if (o == nullptr || field(w, 8, 1) != 0) return reserved;
      const std::uint32_t imm = (field(w, 31, 1) << 12) | (field(w, 7, 1) << 11) |
                                (field(w, 25, 6) << 5) | (field(w, 8, 4) << 1);
      return Instruction{o->op, 0, rs1, rs2, sign_extend(imm, 13)};
    }
    case kOpLui:
      return Instruction{Mnemonic::LUI, rd, 0, 0, static_cast<std::int32_t>(field(w, 12, 20))};
    case kOpJal: {
      if (field(w, 21, 1) != 0) return reserved;
      const std::uint32_t imm = (field(w, 31, 1) << 20) | (field(w, 12, 8) << 12) |
                                (field(w, 20, 1) << 11) | (field(w, 21, 10) << 1);
      return Instruction{Mnemonic::JAL, rd, 0, 0, sign_extend(imm, 21)};
    }
    case kOpSystem:
      if (w != kEcallWord) return reserved;
      return Instruction{Mnemonic::ECALL};
    default:
      return DecodeError{word, DecodeReason::UnknownOpcode};
  }
}

bool is_legal(std::uint32_t w) {
  switch (w & 0x7F) {
    case kOpOp: {
      const std::uint32_t f3 = field(w, 12, 3), f7 = field(w, 25, 7);
      return (f7 == 0 && (f3 == 0 || f3 == 2 || f3 == 4 || f3 == 6 || f3 == 7)) ||
             (f7 == 0x20 && f3 == 0);
    }
    case kOpImm: {
      const std::uint32_t f3 = field(w, 12, 3);
      return f3 == 0 || f3 == 2 || f3 == 4 || f3 == 6 || f3 == 7;
    }
    case kOpLoad:
    case kOpStore: return field(w, 12, 3) == 2;
    case kOpJalr: return field(w, 12, 3) == 0;
    case kOpBranch: {
      const std::uint32_t f3 = field(w, 12, 3);
      return field(w, 8, 1) == 0 && (f3 == 0 || f3 == 1 || f3 == 4 || f3 == 5);
    }
    case kOpLui: return true;
    case kOpJal: return field(w, 21, 1) == 0;
    case kOpSystem: return w == kEcallWord;
    default: return false;
  }
}

double valid_decode_fraction(std::uint64_t sample_count, std::uint64_t seed,
                             const LegalityFn& legal) {
  if (sample_count == 0) throw Error("valid_decode_fraction: sample_count must be positive");
  std::mt19937_64 rng(seed);
  std::uint64_t hits = 0;
  for (std::uint64_t i = 0; i < sample_count; ++i) {
    if (legal(static_cast<std::uint32_t>(rng()))) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(sample_count);
}

std::uint64_t legal_word_count() {
  // Free bits per format once opcode/funct3/funct7 are fixed.
  constexpr std::uint64_t r_free = 1ull << 15;   // rd, rs1, rs2
  constexpr std::uint64_t i_free = 1ull << 22;   // rd, rs1, imm[11:0]
  constexpr std::uint64_t s_free = 1ull << 22;   // rs1, rs2, imm[11:0]
  constexpr std::uint64_t b_free = 1ull << 21;   // rs1, rs2, imm[12:2]; imm[1] reserved
  constexpr std::uint64_t u_free = 1ull << 25;   // rd, imm[31:12]
  constexpr std::uint64_t j_free = 1ull << 24;   // rd, imm[20:2]; imm[1] reserved

  std::uint64_t total = 0;
  for (const auto& o : kOps) {
    switch (o.format) {
      case Format::R: total += r_free; break;
      case Format::I: total += i_free; break;
      case Format::S: total += s_free; break;
      case Format::B: total += b_free; break;
      case Format::U: total += u_free; break;
      case Format::J: total += j_free; break;
      case Format::Sys: total += 1; break;
    }
  }
  return total;
}

double exact_valid_decode_fraction() {
  return static_cast<double>(legal_word_count()) / 4294967296.0;
}

}  // namespace isrlab::isa
