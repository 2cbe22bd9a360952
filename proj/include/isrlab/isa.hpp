#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>

#include "isrlab/error.hpp"

namespace isrlab::isa {

/// A 32-bit encoded instruction, either plaintext or ciphertext.
struct InstructionWord {
  std::uint32_t bits = 0;
  friend constexpr auto operator<=>(InstructionWord, InstructionWord) = default;
};

enum class Mnemonic : std::uint8_t {
  ADD, SUB, AND, OR, XOR, SLT,
  ADDI, ANDI, ORI, XORI, SLTI,
  LUI, LW, SW,
  BEQ, BNE, BLT, BGE,
  JAL, JALR,
  ECALL,
};

inline constexpr int kMnemonicCount = static_cast<int>(Mnemonic::ECALL) + 1;

enum class Format : std::uint8_t { R, I, S, B, U, J, Sys };

Format format_of(Mnemonic m);
std::string_view mnemonic_name(Mnemonic m);
std::optional<Mnemonic> mnemonic_from_name(std::string_view name);

// Fields not used by a mnemonic's format must be zero. `imm` holds the
// sign-extended immediate for I/S/B/J forms (byte offsets for B/J) and the raw
// 20-bit field for LUI.
struct Instruction {
  Mnemonic op = Mnemonic::ECALL;
  std::uint8_t rd = 0;
  std::uint8_t rs1 = 0;
  std::uint8_t rs2 = 0;
  std::int32_t imm = 0;

  friend bool operator==(const Instruction&, const Instruction&) = default;
};

bool is_terminator(Mnemonic m);
bool is_branch(Mnemonic m);

// JALR x0, 0(x1).
bool is_return(const Instruction& i);

std::string to_string(const Instruction& i);

enum class DecodeReason : std::uint8_t {
  UnknownOpcode,
  ReservedField,
  IllegalAllZero,
  IllegalAllOnes,
};

std::string_view reason_name(DecodeReason r);

struct DecodeError {
  InstructionWord word;
  DecodeReason reason;
  friend bool operator==(const DecodeError&, const DecodeError&) = default;
};

class EncodeError : public Error {
 public:
  using Error::Error;
};

using DecodeResult = std::variant<Instruction, DecodeError>;

/// Throws EncodeError for out-of-range registers or immediates.
InstructionWord encode(const Instruction& instr);

DecodeResult decode(InstructionWord word);

inline bool decodes(const DecodeResult& r) { return std::holds_alternative<Instruction>(r); }

/// True iff decode(word) yields an Instruction. Cheaper than decode().
bool is_legal(std::uint32_t word);

using LegalityFn = std::function<bool(std::uint32_t)>;

/// Monte Carlo estimate of the fraction of uniform random words accepted by
/// `legal`. Samples come from std::mt19937_64 seeded with `seed`, one 32-bit
/// word per draw (the low half of each 64-bit output).
double valid_decode_fraction(std::uint64_t sample_count, std::uint64_t seed,
                             const LegalityFn& legal = is_legal);

/// Number of legal words, counted by walking the decoder's opcode table: each
/// accepted (opcode, funct3, funct7) pattern contributes 2^(free bits), less
/// the patterns whose alignment bit is reserved.
///
///   R-type ALU      6 patterns  x 2^15          =    196608
///   I-type ALU      5 funct3    x 2^22          =  20971520
///   LW, JALR        1 each      x 2^22          =   8388608
///   SW              1           x 2^22          =   4194304
///   LUI                           2^25          =  33554432
///   branches        4 funct3    x 2^22 / 2      =   8388608
///   JAL                           2^25 / 2      =  16777216
///   ECALL           exactly one word            =         1
///   total                                       =  92471297
///
/// p = 92471297 / 2^32 = 0.021530...
std::uint64_t legal_word_count();
double exact_valid_decode_fraction();

}  // namespace isrlab::isa
