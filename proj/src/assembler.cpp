#include <algorithm>
#include <cctype>
#include <charconv>
#include <optional>
#include <string>
#include <unordered_map>

#include "isrlab/program.hpp"

namespace isrlab {

namespace {

using isa::Instruction;
using isa::Mnemonic;

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::vector<std::string> split_operands(std::string_view s) {
  std::vector<std::string> out;
  s = trim(s);
  if (s.empty()) return out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == ',') {
      out.emplace_back(trim(s.substr(start, i - start)));
      start = i + 1;
    }
  }
  return out;
}

bool is_identifier(std::string_view s) {
  if (s.empty()) return false;
  if (!(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_' || s[0] == '.')) return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.';
  });
}

std::optional<std::int64_t> parse_number(std::string_view s) {
  s = trim(s);
  bool neg = false;
  if (!s.empty() && (s[0] == '-' || s[0] == '+')) {
    neg = s[0] == '-';
    s.remove_prefix(1);
  }
  int base = 10;
  if (s.size() > 2 && s[0] == '0' && (s[1] == 'x' || s[1] == 'X')) {
    base = 16;
    s.remove_prefix(2);
  }
  if (s.empty()) return std::nullopt;
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v, base);
  if (ec != std::errc{} || ptr != s.data() + s.size() || v > 0xFFFFFFFFull) return std::nullopt;
  const auto sv = static_cast<std::int64_t>(v);
  return neg ? -sv : sv;
}

std::optional<std::uint8_t> parse_register(std::string_view s) {
  static const std::unordered_map<std::string_view, std::uint8_t> kAbi = {
      {"zero", 0}, {"ra", 1},  {"sp", 2},   {"gp", 3},   {"tp", 4},  {"t0", 5},  {"t1", 6},
      {"t2", 7},   {"s0", 8},  {"fp", 8},   {"s1", 9},   {"a0", 10}, {"a1", 11}, {"a2", 12},
      {"a3", 13},  {"a4", 14}, {"a5", 15},  {"a6", 16},  {"a7", 17}, {"s2", 18}, {"s3", 19},
      {"s4", 20},  {"s5", 21}, {"s6", 22},  {"s7", 23},  {"s8", 24}, {"s9", 25}, {"s10", 26},
      {"s11", 27}, {"t3", 28}, {"t4", 29},  {"t5", 30},  {"t6", 31},
  };
  s = trim(s);
  if (auto it = kAbi.find(s); it != kAbi.end()) return it->second;
  if (s.size() >= 2 && s[0] == 'x') {
    unsigned v = 0;
    auto [ptr, ec] = std::from_chars(s.data() + 1, s.data() + s.size(), v);
    if (ec == std::errc{} && ptr == s.data() + s.size() && v < 32) return static_cast<std::uint8_t>(v);
  }
  return std::nullopt;
}

enum class Section { Text, Data };

struct Statement {
  std::size_t line;
  std::string op;  // mnemonic or directive, lower-case
  std::vector<std::string> operands;
  std::size_t text_index;  // valid for instructions and .targets
};

class Assembler {
 public:
  Program run(std::string_view text) {
    first_pass(text);
    second_pass();
    return std::move(prog_);
  }

 private:
  [[noreturn]] void fail(std::size_t line, const std::string& msg) { throw ParseError(line, msg); }

  void define_label(std::size_t line, const std::string& name) {
    if (!is_identifier(name)) fail(line, "invalid label name '" + name + "'");
    if (prog_.labels.contains(name) || data_offsets_.contains(name)) {
      fail(line, "duplicate label '" + name + "'");
    }
    if (section_ == Section::Text) {
      prog_.labels[name] = text_count_;
    } else {
      data_offsets_[name] = data_size_;
    }
  }

  void first_pass(std::string_view text) {
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
      const std::size_t nl = text.find('\n', pos);
      std::string_view line = text.substr(pos, nl == std::string_view::npos ? text.size() - pos : nl - pos);
      pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
      ++line_no;
      if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
      line = trim(line);
      // Labels, possibly several, possibly followed by a statement.
      while (true) {
        const auto colon = line.find(':');
        if (colon == std::string_view::npos) break;
        const std::string_view head = trim(line.substr(0, colon));
        if (!is_identifier(head)) break;
        define_label(line_no, std::string(head));
        line = trim(line.substr(colon + 1));
      }
      if (line.empty()) continue;

      std::size_t sp = 0;
      while (sp < line.size() && !std::isspace(static_cast<unsigned char>(line[sp]))) ++sp;
      std::string op(line.substr(0, sp));
      std::transform(op.begin(), op.end(), op.begin(),
                     [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
      Statement st{line_no, op, split_operands(line.substr(sp)), text_count_};

      if (op == ".text") {
        if (!st.operands.empty()) fail(line_no, ".text takes no operands");
        section_ = Section::Text;
        continue;
      }
      if (op == ".data") {
        if (st.operands.size() > 1) fail(line_no, ".data takes at most one base address");
        if (st.operands.size() == 1) {
          const auto base = parse_number(st.operands[0]);
          if (!base || *base < 0 || (*base & 3) != 0) fail(line_no, "bad .data base address");
          if (data_base_set_ && static_cast<Addr>(*base) != prog_.data_base) {
            fail(line_no, "conflicting .data base address");
          }
          prog_.data_base = static_cast<Addr>(*base);
          data_base_set_ = true;
        }
        section_ = Section::Data;
        continue;
      }
      if (op == ".targets") {
        if (section_ != Section::Text) fail(line_no, ".targets outside .text");
        if (text_count_ == 0) fail(line_no, ".targets must follow a jalr");
        st.text_index = text_count_ - 1;
        statements_.push_back(std::move(st));
        continue;
      }
      if (section_ == Section::Data) {
        if (op == ".word") {
          if (st.operands.empty()) fail(line_no, ".word needs at least one value");
          data_size_ += 4 * st.operands.size();
        } else if (op == ".space") {
          if (st.operands.size() != 1) fail(line_no, ".space takes one size");
          const auto n = parse_number(st.operands[0]);
          if (!n || *n < 0 || *n > (1 << 24)) fail(line_no, "bad .space size");
          data_size_ += static_cast<std::size_t>(*n);
        } else {
          fail(line_no, "unexpected '" + op + "' in .data section");
        }
        statements_.push_back(std::move(st));
        continue;
      }
      if (op.starts_with('.')) fail(line_no, "unknown directive '" + op + "'");
      statements_.push_back(std::move(st));
      ++text_count_;
    }
  }

  std::optional<Addr> data_symbol(std::string_view name) const {
    if (auto it = data_offsets_.find(std::string(name)); it != data_offsets_.end()) {
      return prog_.data_base + static_cast<Addr>(it->second);
    }
    return std::nullopt;
  }

  std::uint8_t reg(const Statement& st, const std::string& s) {
    auto r = parse_register(s);
    if (!r) fail(st.line, "bad register '" + s + "'");
    return *r;
  }

  // Numbers, data symbols, %hi(sym) and %lo(sym).
  std::int64_t immediate(const Statement& st, std::string_view s) {
    s = trim(s);
    if (auto n = parse_number(s)) return *n;
    auto reloc = [&](std::string_view prefix) -> std::optional<std::string_view> {
      if (s.starts_with(prefix) && s.ends_with(')')) {
        return trim(s.substr(prefix.size(), s.size() - prefix.size() - 1));
      }
      return std::nullopt;
    };
    auto value_of = [&](std::string_view inner) -> std::int64_t {
      if (auto n = parse_number(inner)) return *n;
      if (auto a = data_symbol(inner)) return *a;
      if (prog_.labels.contains(std::string(inner))) {
        fail(st.line, "text label '" + std::string(inner) + "' cannot be used as an absolute value");
      }
      fail(st.line, "unresolved label '" + std::string(inner) + "'");
    };
    if (auto inner = reloc("%hi(")) {
      const auto v = static_cast<std::uint32_t>(value_of(*inner));
      return ((v + 0x800u) >> 12) & 0xFFFFFu;
    }
    if (auto inner = reloc("%lo(")) {
      const auto v = static_cast<std::uint32_t>(value_of(*inner)) & 0xFFFu;
      return v >= 0x800 ? static_cast<std::int64_t>(v) - 0x1000 : static_cast<std::int64_t>(v);
    }
    if (is_identifier(s)) return value_of(s);
    fail(st.line, "bad immediate '" + std::string(s) + "'");
  }

  std::int32_t checked_imm(const Statement& st, std::int64_t v, std::int64_t lo, std::int64_t hi) {
    if (v < lo || v > hi) {
      fail(st.line, "immediate " + std::to_string(v) + " outside [" + std::to_string(lo) + ", " +
                        std::to_string(hi) + "]");
    }
    return static_cast<std::int32_t>(v);
  }

  // "imm(reg)" memory operand.
  std::pair<std::int32_t, std::uint8_t> mem_operand(const Statement& st, const std::string& s) {
    const auto open = s.rfind('(');
    if (open == std::string::npos || s.back() != ')') fail(st.line, "expected imm(reg), got '" + s + "'");
    const std::string_view offs = trim(std::string_view(s).substr(0, open));
    const auto r = reg(st, s.substr(open + 1, s.size() - open - 2));
    const std::int64_t off = offs.empty() ? 0 : immediate(st, offs);
    return {checked_imm(st, off, -2048, 2047), r};
  }

  // PC-relative byte offset to a text label or an explicit numeric offset.
  std::int32_t target_offset(const Statement& st, const std::string& s) {
    if (auto n = parse_number(s)) return static_cast<std::int32_t>(*n);
    auto it = prog_.labels.find(s);
    if (it == prog_.labels.end()) {
      if (data_symbol(s)) fail(st.line, "branch target '" + s + "' is a data label");
      fail(st.line, "unresolved label '" + s + "'");
    }
    return static_cast<std::int32_t>((static_cast<std::int64_t>(it->second) -
                                      static_cast<std::int64_t>(st.text_index)) * 4);
  }

  void expect_count(const Statement& st, std::size_t n) {
    if (st.operands.size() != n) {
      fail(st.line, "'" + st.op + "' expects " + std::to_string(n) + " operand(s), got " +
                        std::to_string(st.operands.size()));
    }
  }

  Instruction instruction(const Statement& st) {
    const auto& ops = st.operands;
    // Single-instruction pseudo-ops.
    if (st.op == "nop") { expect_count(st, 0); return {Mnemonic::ADDI}; }
    if (st.op == "mv") { expect_count(st, 2); return {Mnemonic::ADDI, reg(st, ops[0]), reg(st, ops[1])}; }
    if (st.op == "li") {
      expect_count(st, 2);
      return {Mnemonic::ADDI, reg(st, ops[0]), 0, 0, checked_imm(st, immediate(st, ops[1]), -2048, 2047)};
    }
    if (st.op == "j") { expect_count(st, 1); return {Mnemonic::JAL, 0, 0, 0, target_offset(st, ops[0])}; }
    if (st.op == "call") { expect_count(st, 1); return {Mnemonic::JAL, 1, 0, 0, target_offset(st, ops[0])}; }
    if (st.op == "jr") { expect_count(st, 1); return {Mnemonic::JALR, 0, reg(st, ops[0])}; }
    if (st.op == "ret") { expect_count(st, 0); return {Mnemonic::JALR, 0, 1}; }
    if (st.op == "beqz" || st.op == "bnez") {
      expect_count(st, 2);
      return {st.op == "beqz" ? Mnemonic::BEQ : Mnemonic::BNE, 0, reg(st, ops[0]), 0,
              target_offset(st, ops[1])};
    }

    const auto m = isa::mnemonic_from_name(st.op);
    if (!m) fail(st.line, "unknown mnemonic '" + st.op + "'");
    switch (isa::format_of(*m)) {
      case isa::Format::R:
        expect_count(st, 3);
        return {*m, reg(st, ops[0]), reg(st, ops[1]), reg(st, ops[2])};
      case isa::Format::I:
        if (*m == Mnemonic::LW) {
          expect_count(st, 2);
          auto [off, base] = mem_operand(st, ops[1]);
          return {*m, reg(st, ops[0]), base, 0, off};
        }
        if (*m == Mnemonic::JALR) {
          if (ops.size() == 1) return {*m, 1, reg(st, ops[0])};
          if (ops.size() == 2) {
            auto [off, base] = mem_operand(st, ops[1]);
            return {*m, reg(st, ops[0]), base, 0, off};
          }
          expect_count(st, 3);
        } else {
          expect_count(st, 3);
        }
        return {*m, reg(st, ops[0]), reg(st, ops[1]), 0,
                checked_imm(st, immediate(st, ops[2]), -2048, 2047)};
      case isa::Format::S: {
        expect_count(st, 2);
        auto [off, base] = mem_operand(st, ops[1]);
        return {*m, 0, base, reg(st, ops[0]), off};
      }
      case isa::Format::B:
        expect_count(st, 3);
        return {*m, 0, reg(st, ops[0]), reg(st, ops[1]), target_offset(st, ops[2])};
      case isa::Format::U: {
        expect_count(st, 2);
        std::int64_t v = immediate(st, ops[1]);
        if (v < 0 && v >= -(1 << 19)) v += 1 << 20;
        return {*m, reg(st, ops[0]), 0, 0, checked_imm(st, v, 0, 0xFFFFF)};
      }
      case isa::Format::J:
        if (ops.size() == 1) return {*m, 1, 0, 0, target_offset(st, ops[0])};
        expect_count(st, 2);
        return {*m, reg(st, ops[0]), 0, 0, target_offset(st, ops[1])};
      case isa::Format::Sys:
        expect_count(st, 0);
        return {*m};
    }
    fail(st.line, "unreachable");
  }

  void emit_word(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) prog_.data.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }

  void second_pass() {
    for (const auto& [name, off] : data_offsets_) {
      prog_.data_symbols[name] = prog_.data_base + static_cast<Addr>(off);
    }
    for (const auto& st : statements_) {
      if (st.op == ".word") {
        for (const auto& v : st.operands) {
          if (auto it = prog_.labels.find(v); it != prog_.labels.end()) {
            prog_.relocations.push_back({prog_.data.size(), it->second});
            emit_word(0);
          } else {
            emit_word(static_cast<std::uint32_t>(immediate(st, v)));
          }
        }
      } else if (st.op == ".space") {
        prog_.data.resize(prog_.data.size() + static_cast<std::size_t>(*parse_number(st.operands[0])), 0);
      } else if (st.op == ".targets") {
        if (prog_.instructions.empty() || prog_.instructions.back().op != Mnemonic::JALR ||
            prog_.instructions.size() != st.text_index + 1) {
          fail(st.line, ".targets must follow a jalr");
        }
        if (st.operands.empty()) fail(st.line, ".targets needs at least one label");
        auto& set = prog_.indirect_targets[st.text_index];
        for (const auto& t : st.operands) {
          auto it = prog_.labels.find(t);
          if (it == prog_.labels.end()) fail(st.line, "unresolved label '" + t + "'");
          if (it->second >= text_count_) fail(st.line, "target '" + t + "' is past the end of text");
          if (std::find(set.begin(), set.end(), it->second) == set.end()) set.push_back(it->second);
        }
      } else {
        Instruction in = instruction(st);
        if (isa::is_branch(in.op) || in.op == Mnemonic::JAL) {
          const std::int64_t dest = static_cast<std::int64_t>(st.text_index) + in.imm / 4;
          if (in.imm % 4 != 0 || dest < 0 || dest >= static_cast<std::int64_t>(text_count_)) {
            fail(st.line, "transfer target outside text");
          }
        }
        try {
          (void)isa::encode(in);
        } catch (const isa::EncodeError& e) {
          fail(st.line, e.what());
        }
        prog_.instructions.push_back(in);
        prog_.source_lines.push_back(st.line);
      }
    }
  }

  Program prog_;
  Section section_ = Section::Text;
  bool data_base_set_ = false;
  std::size_t text_count_ = 0;
  std::size_t data_size_ = 0;
  std::map<std::string, std::size_t> data_offsets_;
  std::vector<Statement> statements_;
};

}  // namespace

Program parse_assembly(std::string_view text) { return Assembler{}.run(text); }

}  // namespace isrlab
