#include <gtest/gtest.h>

#include "isrlab/container.hpp"
#include "isrlab/crypto.hpp"
#include "isrlab/program.hpp"
#include "support.hpp"

using namespace isrlab;
namespace ts = testing_support;

TEST(Layout, EmptyDataSegment) {
  const auto img = layout_image(parse_assembly("addi a0, zero, 1\necall\n"));
  EXPECT_TRUE(img.data.empty());
}

TEST(Layout, TwoInstructionsAtBase) {
  const auto img = layout_image(parse_assembly("addi x1, x0, 5\necall\n"), 0x1000);
  EXPECT_EQ(img.text.size(), 8u);
  EXPECT_EQ(img.entry, 0x1000u);
  EXPECT_EQ(img.text_base, 0x1000u);
  // Little-endian words.
  EXPECT_EQ(img.text[0], 0x93);
  EXPECT_EQ(img.text[1], 0x00);
  EXPECT_EQ(img.text[2], 0x50);
  EXPECT_EQ(img.text[3], 0x00);
  EXPECT_EQ(img.text_word(1), 0x00000073u);
  ASSERT_EQ(img.cfg.blocks.size(), 1u);
  EXPECT_EQ(img.cfg.blocks[0].entry_addr, 0x1000u);
}

TEST(Layout, FibDigestIsFrozen) {
  const auto fx = ts::load_json(ts::source_dir() / "fixtures" / "layout_digests.json")["fib"];
  const auto bytes = serialize(ts::load_image("fib", fx["text_base"].get<Addr>()));
  EXPECT_EQ(bytes.size(), fx["container_bytes"].get<std::size_t>());
  EXPECT_EQ(hex64(fnv1a64(bytes)), fx["container_fnv1a64"].get<std::string>());
}

TEST(Layout, Errors) {
  const auto p = parse_assembly(".data 0x100\nx: .word 1\n.text\naddi a0, zero, 1\necall\n");
  EXPECT_THROW(layout_image(p, 2), LayoutError);
  EXPECT_THROW(layout_image(p, 0xFC), LayoutError);    // text [0xFC,0x104) overlaps data at 0x100
  EXPECT_THROW(layout_image(p, 0x7FFF0000), LayoutError);  // inside the stack
  EXPECT_NO_THROW(layout_image(p, 0x1000));
}

TEST(Layout, RelocationsFollowTextBase) {
  const auto p = parse_assembly(".data\nt: .word target\n.text\n  nop\ntarget: ecall\n");
  const auto img = layout_image(p, 0x4000);
  ASSERT_EQ(img.data.size(), 4u);
  const std::uint32_t v = img.data[0] | img.data[1] << 8 | img.data[2] << 16 | static_cast<std::uint32_t>(img.data[3]) << 24;
  EXPECT_EQ(v, 0x4004u);
}

TEST(LayoutProperty, ByteDeterministicAndRebased) {
  for (const auto& name : ts::corpus_names()) {
    const auto a = ts::load_image(name);
    EXPECT_EQ(serialize(a), serialize(ts::load_image(name))) << name;
    const auto b = ts::load_image(name, 0x2000);
    EXPECT_EQ(a.cfg.blocks.size(), b.cfg.blocks.size());
    for (std::size_t i = 0; i < a.cfg.blocks.size(); ++i) {
      EXPECT_EQ(b.cfg.blocks[i].entry_addr, a.cfg.blocks[i].entry_addr + 0x2000u) << name;
    }
    EXPECT_EQ(a.cfg.edges, b.cfg.edges);
  }
}

TEST(Container, RoundTripsPlainAndEncrypted) {
  for (const auto& name : ts::corpus_names()) {
    const auto img = ts::load_image(name, 0x400);
    EXPECT_EQ(parse_image(serialize(img)), img) << name;
    const auto e = ts::encrypt(img, 5);
    EXPECT_EQ(parse_encrypted(serialize(e)), e) << name;
    EXPECT_TRUE(std::holds_alternative<Image>(parse_container(serialize(img))));
    EXPECT_TRUE(std::holds_alternative<crypto::EncryptedImage>(parse_container(serialize(e))));
  }
}

TEST(Container, RejectsMalformedInput) {
  auto bytes = serialize(ts::load_image("fib"));
  EXPECT_THROW(parse_image(std::span(bytes).first(10)), FormatError);
  auto bad = bytes;
  bad[0] = 'X';
  EXPECT_THROW(parse_image(bad), FormatError);
  auto trailing = bytes;
  trailing.push_back(0);
  EXPECT_THROW(parse_container(trailing), FormatError);
  EXPECT_THROW(parse_encrypted(bytes), FormatError);
  const auto ebytes = serialize(ts::encrypt(ts::load_image("fib")));
  EXPECT_THROW(parse_image(ebytes), FormatError);
}

TEST(Container, Fnv1a64KnownValues) {
  // Published FNV-1a 64 test values.
  const std::string empty, a = "a", foobar = "foobar";
  auto h = [](const std::string& s) {
    return fnv1a64(std::span(reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
  };
  EXPECT_EQ(h(empty), 0xcbf29ce484222325ull);
  EXPECT_EQ(h(a), 0xaf63dc4c8601ec8cull);
  EXPECT_EQ(h(foobar), 0x85944171f73967e8ull);
}
