#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "isrlab/error.hpp"
#include "isrlab/isa.hpp"

namespace isrlab {

using Addr = std::uint32_t;
using BlockId = std::uint32_t;

inline constexpr Addr kDefaultDataBase = 0x00010000;
inline constexpr Addr kStackTop = 0x80000000;
inline constexpr Addr kStackSize = 0x00010000;

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& msg)
      : Error("line " + std::to_string(line) + ": " + msg), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class AnalysisError : public Error {
 public:
  using Error::Error;
};

class LayoutError : public Error {
 public:
  using Error::Error;
};

// A data word whose value is the address of a text label, resolved at layout.
struct DataRelocation {
  std::size_t data_offset;
  std::size_t instruction_index;
};

struct Program {
  std::vector<isa::Instruction> instructions;
  std::vector<std::size_t> source_lines;  // parallel to instructions
  std::map<std::string, std::size_t> labels;
  std::map<std::string, Addr> data_symbols;
  Addr data_base = kDefaultDataBase;
  std::vector<std::uint8_t> data;
  std::vector<DataRelocation> relocations;
  // `.targets` sets, keyed by the index of the JALR they follow.
  std::map<std::size_t, std::vector<std::size_t>> indirect_targets;
};

/// Throws ParseError carrying the 1-based line number.
Program parse_assembly(std::string_view text);

struct BasicBlock {
  BlockId id = 0;
  Addr entry_addr = 0;
  std::uint32_t length_words = 0;
  friend bool operator==(const BasicBlock&, const BasicBlock&) = default;
};

enum class EdgeKind : std::uint8_t { Fallthrough, BranchTaken, Jump, Call, Return, Indirect };

std::string_view edge_kind_name(EdgeKind k);
std::optional<EdgeKind> edge_kind_from_name(std::string_view name);

struct Edge {
  BlockId source = 0;
  BlockId target = 0;
  EdgeKind kind = EdgeKind::Fallthrough;
  friend bool operator==(const Edge&, const Edge&) = default;
};

// Blocks are ordered by entry address and numbered from 0. Edges are unique
// per (source, target) and sorted by that pair. When a taken branch lands on
// its own fallthrough successor the edge keeps the taken kind.
struct ControlFlowGraph {
  std::vector<BasicBlock> blocks;
  std::vector<Edge> edges;

  bool has_edge(BlockId source, BlockId target) const;
  std::optional<BlockId> block_at_entry(Addr addr) const;
  std::optional<BlockId> block_containing(Addr addr) const;
  friend bool operator==(const ControlFlowGraph&, const ControlFlowGraph&) = default;
};

/// Addresses in the returned graph assume text_base = 0; layout_image rebases.
ControlFlowGraph build_cfg(const Program& program);

struct Image {
  Addr text_base = 0;
  Addr entry = 0;
  std::vector<std::uint8_t> text;
  Addr data_base = kDefaultDataBase;
  std::vector<std::uint8_t> data;
  ControlFlowGraph cfg;

  std::size_t text_words() const { return text.size() / 4; }
  std::uint32_t text_word(std::size_t index) const;
  friend bool operator==(const Image&, const Image&) = default;
};

Image layout_image(const Program& program, Addr text_base = 0);

}  // namespace isrlab
