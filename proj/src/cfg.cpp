#include <algorithm>
#include <deque>
#include <map>
#include <set>
#include <sstream>

#include "isrlab/program.hpp"

namespace isrlab {

using isa::Instruction;
using isa::Mnemonic;

std::string_view edge_kind_name(EdgeKind k) {
  switch (k) {
    case EdgeKind::Fallthrough: return "fallthrough";
    case EdgeKind::BranchTaken: return "branch-taken";
    case EdgeKind::Jump: return "jump";
    case EdgeKind::Call: return "call";
    case EdgeKind::Return: return "return";
    case EdgeKind::Indirect: return "indirect";
  }
  return "?";
}

std::optional<EdgeKind> edge_kind_from_name(std::string_view name) {
  for (auto k : {EdgeKind::Fallthrough, EdgeKind::BranchTaken, EdgeKind::Jump, EdgeKind::Call,
                 EdgeKind::Return, EdgeKind::Indirect}) {
    if (edge_kind_name(k) == name) return k;
  }
  return std::nullopt;
}

bool ControlFlowGraph::has_edge(BlockId source, BlockId target) const {
  return std::any_of(edges.begin(), edges.end(),
                     [&](const Edge& e) { return e.source == source && e.target == target; });
}

std::optional<BlockId> ControlFlowGraph::block_at_entry(Addr addr) const {
  auto it = std::lower_bound(blocks.begin(), blocks.end(), addr,
                             [](const BasicBlock& b, Addr a) { return b.entry_addr < a; });
  if (it != blocks.end() && it->entry_addr == addr) return it->id;
  return std::nullopt;
}

std::optional<BlockId> ControlFlowGraph::block_containing(Addr addr) const {
  auto it = std::upper_bound(blocks.begin(), blocks.end(), addr,
                             [](Addr a, const BasicBlock& b) { return a < b.entry_addr; });
  if (it == blocks.begin()) return std::nullopt;
  --it;
  if (addr - it->entry_addr < 4u * it->length_words && (addr & 3) == (it->entry_addr & 3)) return it->id;
  return std::nullopt;
}

namespace {

std::string hex_addr(std::size_t index) {
  std::ostringstream os;
  os << "0x" << std::hex << index * 4;
  return os.str();
}

bool is_call(const Instruction& in) {
  return (in.op == Mnemonic::JAL || in.op == Mnemonic::JALR) && in.rd != 0;
}

}  // namespace

ControlFlowGraph build_cfg(const Program& program) {
  const auto& code = program.instructions;
  const std::size_t n = code.size();
  ControlFlowGraph cfg;
  if (n == 0) return cfg;

  auto direct_target = [&](std::size_t i) -> std::size_t {
    const std::int64_t dest = static_cast<std::int64_t>(i) + code[i].imm / 4;
    if (code[i].imm % 4 != 0 || dest < 0 || dest >= static_cast<std::int64_t>(n)) {
      throw AnalysisError("transfer at " + hex_addr(i) + " leaves the text segment");
    }
    return static_cast<std::size_t>(dest);
  };
  auto declared = [&](std::size_t i) -> const std::vector<std::size_t>* {
    auto it = program.indirect_targets.find(i);
    return it == program.indirect_targets.end() ? nullptr : &it->second;
  };

  std::set<std::size_t> leaders{0};
  for (std::size_t i = 0; i < n; ++i) {
    const auto& in = code[i];
    if (!isa::is_terminator(in.op)) continue;
    if (i + 1 < n) leaders.insert(i + 1);
    if (isa::is_branch(in.op) || in.op == Mnemonic::JAL) leaders.insert(direct_target(i));
    if (const auto* t = declared(i)) {
      for (auto d : *t) {
        if (d >= n) throw AnalysisError("declared target of " + hex_addr(i) + " leaves the text segment");
        leaders.insert(d);
      }
    }
  }

  std::vector<BlockId> block_of(n);
  for (auto it = leaders.begin(); it != leaders.end(); ++it) {
    const std::size_t start = *it;
    const std::size_t end = std::next(it) == leaders.end() ? n : *std::next(it);
    const auto id = static_cast<BlockId>(cfg.blocks.size());
    cfg.blocks.push_back({id, static_cast<Addr>(start * 4), static_cast<std::uint32_t>(end - start)});
    for (std::size_t i = start; i < end; ++i) block_of[i] = id;
  }
  auto last_index = [&](BlockId b) {
    return cfg.blocks[b].entry_addr / 4 + cfg.blocks[b].length_words - 1;
  };

  std::map<std::pair<BlockId, BlockId>, EdgeKind> edges;
  auto add = [&](BlockId s, std::size_t target_index, EdgeKind k) {
    edges.try_emplace({s, block_of[target_index]}, k);
  };
  auto successor_index = [&](std::size_t i) {
    if (i + 1 >= n) throw AnalysisError("control falls off the end of text after " + hex_addr(i));
    return i + 1;
  };

  // Call sites per callee block: the blocks their returns must go back to.
  std::map<BlockId, std::set<BlockId>> return_sites;
  std::vector<BlockId> return_blocks;

  for (const auto& b : cfg.blocks) {
    const std::size_t i = last_index(b.id);
    const auto& in = code[i];
    if (isa::is_branch(in.op)) {
      add(b.id, direct_target(i), EdgeKind::BranchTaken);
      add(b.id, successor_index(i), EdgeKind::Fallthrough);
    } else if (in.op == Mnemonic::JAL) {
      const std::size_t t = direct_target(i);
      if (is_call(in)) {
        add(b.id, t, EdgeKind::Call);
        return_sites[block_of[t]].insert(block_of[successor_index(i)]);
      } else {
        add(b.id, t, EdgeKind::Jump);
      }
    } else if (in.op == Mnemonic::JALR) {
      if (isa::is_return(in)) {
        return_blocks.push_back(b.id);
        continue;
      }
      const auto* t = declared(i);
      if (t == nullptr) throw AnalysisError("jalr at " + hex_addr(i) + " has no declared target set");
      for (auto d : *t) {
        add(b.id, d, EdgeKind::Indirect);
        if (is_call(in)) return_sites[block_of[d]].insert(block_of[successor_index(i)]);
      }
    } else if (in.op != Mnemonic::ECALL) {
      add(b.id, successor_index(i), EdgeKind::Fallthrough);
    }
  }

  // Walk each callee intra-procedurally: calls inside it resume at their
  // return site rather than descending into the nested callee.
  std::map<BlockId, std::set<BlockId>> return_targets;
  for (const auto& [callee, sites] : return_sites) {
    std::set<BlockId> seen{callee};
    std::deque<BlockId> work{callee};
    while (!work.empty()) {
      const BlockId b = work.front();
      work.pop_front();
      const std::size_t i = last_index(b);
      const auto& in = code[i];
      if (isa::is_return(in)) {
        return_targets[b].insert(sites.begin(), sites.end());
        continue;
      }
      std::vector<BlockId> next;
      if (is_call(in)) {
        next.push_back(block_of[successor_index(i)]);
      } else {
        for (const auto& [key, kind] : edges) {
          if (key.first == b) next.push_back(key.second);
        }
      }
      for (auto s : next) {
        if (seen.insert(s).second) work.push_back(s);
      }
    }
  }

  for (BlockId r : return_blocks) {
    const std::size_t i = last_index(r);
    std::set<BlockId> targets = return_targets[r];
    if (const auto* t = declared(i)) {
      for (auto d : *t) targets.insert(block_of[d]);
    }
    if (targets.empty()) {
      throw AnalysisError("jalr at " + hex_addr(i) + " has no declared target set");
    }
    for (auto t : targets) edges.try_emplace({r, t}, EdgeKind::Return);
  }

  for (const auto& [key, kind] : edges) cfg.edges.push_back({key.first, key.second, kind});
  return cfg;
}

}  // namespace isrlab
