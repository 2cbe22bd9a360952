#include <gtest/gtest.h>

#include <numeric>
#include <set>

#include "isrlab/engine.hpp"
#include "isrlab/program.hpp"
#include "support.hpp"

using namespace isrlab;
namespace ts = testing_support;

TEST(Cfg, StraightLine) {
  const auto cfg = build_cfg(parse_assembly("addi a0, zero, 1\naddi a1, zero, 2\necall\n"));
  ASSERT_EQ(cfg.blocks.size(), 1u);
  EXPECT_EQ(cfg.blocks[0].length_words, 3u);
  EXPECT_TRUE(cfg.edges.empty());
}

TEST(Cfg, Diamond) {
  // Hand-derived: B0 = {beq}, B1 = {addi a1}, B2 = {addi a2; ecall}.
  // B0 -> B2 taken, B0 -> B1 fallthrough, B1 -> B2 fallthrough.
  const auto cfg = build_cfg(ts::load_program("diamond"));
  ASSERT_EQ(cfg.blocks.size(), 3u);
  EXPECT_EQ(cfg.blocks[0], (BasicBlock{0, 0, 1}));
  EXPECT_EQ(cfg.blocks[1], (BasicBlock{1, 4, 1}));
  EXPECT_EQ(cfg.blocks[2], (BasicBlock{2, 8, 2}));
  const std::vector<Edge> want = {
      {0, 1, EdgeKind::Fallthrough}, {0, 2, EdgeKind::BranchTaken}, {1, 2, EdgeKind::Fallthrough}};
  EXPECT_EQ(cfg.edges, want);
}

TEST(Cfg, FibMatchesHandBuiltFixture) {
  const auto fx = ts::load_json(ts::source_dir() / "fixtures" / "fib_cfg.json");
  const auto cfg = build_cfg(ts::load_program("fib"));
  ASSERT_EQ(cfg.blocks.size(), fx["blocks"].size());
  for (std::size_t i = 0; i < cfg.blocks.size(); ++i) {
    const auto& b = fx["blocks"][i];
    EXPECT_EQ(cfg.blocks[i].id, b["id"].get<BlockId>());
    EXPECT_EQ(cfg.blocks[i].entry_addr, b["entry"].get<Addr>());
    EXPECT_EQ(cfg.blocks[i].length_words, b["length"].get<std::uint32_t>());
  }
  std::vector<Edge> want;
  for (const auto& e : fx["edges"]) {
    want.push_back({e[0].get<BlockId>(), e[1].get<BlockId>(), *edge_kind_from_name(e[2].get<std::string>())});
  }
  EXPECT_EQ(cfg.edges, want);
}

TEST(Cfg, ManifestCounts) {
  for (const auto& name : ts::corpus_names()) {
    const auto cfg = build_cfg(ts::load_program(name));
    const auto& m = ts::manifest()[name];
    EXPECT_EQ(cfg.blocks.size(), m["blocks"].get<std::size_t>()) << name;
    EXPECT_EQ(cfg.edges.size(), m["edges"].get<std::size_t>()) << name;
  }
}

TEST(Cfg, JalrWithoutTargetsIsAnError) {
  try {
    build_cfg(parse_assembly("addi t0, zero, 8\njalr zero, t0, 0\necall\n"));
    FAIL() << "expected AnalysisError";
  } catch (const AnalysisError& e) {
    EXPECT_NE(std::string(e.what()).find("0x4"), std::string::npos) << e.what();
  }
}

TEST(Cfg, ReturnWithoutCallerIsAnError) {
  EXPECT_THROW(build_cfg(parse_assembly("addi a0, zero, 1\nret\n")), AnalysisError);
}

TEST(Cfg, FallingOffTheEndIsAnError) {
  EXPECT_THROW(build_cfg(parse_assembly("addi a0, zero, 1\n")), AnalysisError);
}

TEST(Cfg, ReturnsGoToEveryCallerReturnSite) {
  const auto cfg = build_cfg(parse_assembly(
      "  call f\n"   // B0
      "  call f\n"   // B1
      "  ecall\n"    // B2
      "f: addi a0, a0, 1\n"
      "  ret\n"));   // B3
  ASSERT_EQ(cfg.blocks.size(), 4u);
  EXPECT_TRUE(cfg.has_edge(3, 1));
  EXPECT_TRUE(cfg.has_edge(3, 2));
  EXPECT_FALSE(cfg.has_edge(3, 0));
}

TEST(Cfg, NestedCallsReturnIntraProcedurally) {
  // g's return must not be wired to main's return site.
  const auto cfg = build_cfg(parse_assembly(
      "  call f\n"        // B0
      "  ecall\n"         // B1
      "f: addi sp, sp, -4\n"
      "  sw ra, 0(sp)\n"
      "  call g\n"        // B2
      "  lw ra, 0(sp)\n"
      "  addi sp, sp, 4\n"
      "  ret\n"           // B3
      "g: ret\n"));       // B4
  ASSERT_EQ(cfg.blocks.size(), 5u);
  EXPECT_TRUE(cfg.has_edge(3, 1));
  EXPECT_TRUE(cfg.has_edge(4, 3));
  EXPECT_FALSE(cfg.has_edge(4, 1));
  EXPECT_FALSE(cfg.has_edge(3, 3));
}

TEST(Cfg, DeclaredTargetsMakeLeaders) {
  const auto cfg = build_cfg(parse_assembly(
      "  addi t0, zero, 12\n"
      "  jalr zero, t0, 0\n"
      "  .targets a, b\n"
      "a: addi a0, zero, 1\n"
      "b: ecall\n"));
  ASSERT_EQ(cfg.blocks.size(), 3u);
  EXPECT_TRUE(cfg.has_edge(0, 1));
  EXPECT_TRUE(cfg.has_edge(0, 2));
  EXPECT_EQ(cfg.edges[0].kind, EdgeKind::Indirect);
}

TEST(CfgProperty, BlocksTileTheText) {
  for (const auto& name : ts::corpus_names()) {
    const auto p = ts::load_program(name);
    const auto cfg = build_cfg(p);
    std::uint64_t total = 0;
    Addr expect_entry = 0;
    for (std::size_t i = 0; i < cfg.blocks.size(); ++i) {
      EXPECT_EQ(cfg.blocks[i].id, i);
      EXPECT_EQ(cfg.blocks[i].entry_addr, expect_entry) << name;
      EXPECT_GT(cfg.blocks[i].length_words, 0u);
      expect_entry += 4 * cfg.blocks[i].length_words;
      total += cfg.blocks[i].length_words;
    }
    EXPECT_EQ(total, p.instructions.size()) << name;
  }
}

TEST(CfgProperty, EdgesSortedAndUnique) {
  for (const auto& name : ts::corpus_names()) {
    const auto cfg = build_cfg(ts::load_program(name));
    for (std::size_t i = 1; i < cfg.edges.size(); ++i) {
      const auto& a = cfg.edges[i - 1];
      const auto& b = cfg.edges[i];
      EXPECT_LT(std::make_pair(a.source, a.target), std::make_pair(b.source, b.target)) << name;
    }
  }
}

TEST(CfgProperty, ConcreteExecutionsOnlyTraverseCfgEdges) {
  for (const auto& name : ts::corpus_names()) {
    const auto img = ts::load_image(name);
    const auto t = exec::trace(img);
    ASSERT_FALSE(t.empty());
    for (std::size_t i = 1; i < t.size(); ++i) {
      const auto from = img.cfg.block_containing(t[i - 1].pc);
      const auto to = img.cfg.block_containing(t[i].pc);
      ASSERT_TRUE(from && to) << name;
      const bool sequential = t[i].pc == t[i - 1].pc + 4;
      const bool enters_block = img.cfg.block_at_entry(t[i].pc).has_value();
      if (sequential && *from == *to) continue;
      ASSERT_TRUE(enters_block) << name << ": transfer into the middle of a block at " << t[i].pc;
      EXPECT_TRUE(img.cfg.has_edge(*from, *to)) << name << ": " << *from << " -> " << *to;
    }
  }
}

TEST(CfgProperty, FollowingEveryTerminatorIsALeader) {
  for (const auto& name : ts::corpus_names()) {
    const auto p = ts::load_program(name);
    const auto cfg = build_cfg(p);
    for (std::size_t i = 0; i + 1 < p.instructions.size(); ++i) {
      if (isa::is_terminator(p.instructions[i].op)) {
        EXPECT_TRUE(cfg.block_at_entry(static_cast<Addr>(4 * (i + 1)))) << name << " index " << i;
      }
    }
  }
}
