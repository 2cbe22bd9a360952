#include <sstream>

#include "isrlab/program.hpp"

namespace isrlab {

std::uint32_t Image::text_word(std::size_t index) const {
  const std::size_t o = index * 4;
  return static_cast<std::uint32_t>(text.at(o)) | static_cast<std::uint32_t>(text.at(o + 1)) << 8 |
         static_cast<std::uint32_t>(text.at(o + 2)) << 16 |
         static_cast<std::uint32_t>(text.at(o + 3)) << 24;
}

namespace {

struct Range {
  std::uint64_t lo, hi;  // [lo, hi)
  const char* name;
};

bool overlaps(const Range& a, const Range& b) {
  return a.lo < a.hi && b.lo < b.hi && a.lo < b.hi && b.lo < a.hi;
}

void put_word(std::vector<std::uint8_t>& out, std::size_t at, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out[at + i] = static_cast<std::uint8_t>(v >> (8 * i));
}

}  // namespace

Image layout_image(const Program& program, Addr text_base) {
  if (text_base % 4 != 0) throw LayoutError("text base must be 4-byte aligned");
  Image img;
  img.text_base = text_base;
  img.entry = text_base;
  img.data_base = program.data_base;

  const std::uint64_t text_end = std::uint64_t{text_base} + 4 * program.instructions.size();
  const std::uint64_t data_end = std::uint64_t{program.data_base} + program.data.size();
  if (text_end > 0x100000000ull || data_end > 0x100000000ull) {
    throw LayoutError("segment extends past the end of the address space");
  }
  const Range text{text_base, text_end, "text"};
  const Range data{program.data_base, data_end, "data"};
  const Range stack{kStackTop - kStackSize, kStackTop, "stack"};
  for (auto [a, b] : {std::pair{text, data}, std::pair{text, stack}, std::pair{data, stack}}) {
    if (overlaps(a, b)) {
      std::ostringstream os;
      os << a.name << " segment [0x" << std::hex << a.lo << ", 0x" << a.hi << ") overlaps " << b.name
         << " segment [0x" << b.lo << ", 0x" << b.hi << ")";
      throw LayoutError(os.str());
    }
  }

  img.text.resize(program.instructions.size() * 4);
  for (std::size_t i = 0; i < program.instructions.size(); ++i) {
    put_word(img.text, i * 4, isa::encode(program.instructions[i]).bits);
  }
  img.data = program.data;
  for (const auto& r : program.relocations) {
    if (r.data_offset + 4 > img.data.size() || r.instruction_index >= program.instructions.size()) {
      throw LayoutError("relocation outside data segment");
    }
    put_word(img.data, r.data_offset, text_base + static_cast<Addr>(4 * r.instruction_index));
  }

  img.cfg = build_cfg(program);
  for (auto& b : img.cfg.blocks) b.entry_addr += text_base;
  return img;
}

}  // namespace isrlab
