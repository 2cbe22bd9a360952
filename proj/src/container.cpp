#include "isrlab/container.hpp"

#include <cstring>
#include <fstream>
#include <iterator>

namespace isrlab {

std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes, std::uint64_t h) {
  for (auto b : bytes) {
    h ^= b;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, v >>= 4) s[static_cast<std::size_t>(i)] = kDigits[v & 15];
  return s;
}

namespace {

constexpr char kImageMagic[4] = {'I', 'S', 'R', '1'};
constexpr char kPatchMagic[4] = {'K', 'E', 'Y', 'T'};
constexpr char kEntryKeyMagic[4] = {'E', 'K', 'E', 'Y'};
constexpr std::uint32_t kVersion = 1;

class Writer {
 public:
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void magic(const char (&m)[4]) { out_.insert(out_.end(), m, m + 4); }
  void bytes(std::span<const std::uint8_t> b) { out_.insert(out_.end(), b.begin(), b.end()); }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

  std::uint32_t u32() {
    need(4, "u32");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  bool peek_magic(const char (&m)[4]) const {
    return pos_ + 4 <= in_.size() && std::memcmp(in_.data() + pos_, m, 4) == 0;
  }
  void magic(const char (&m)[4]) {
    if (!peek_magic(m)) throw FormatError(std::string("expected section magic ") + std::string(m, 4));
    pos_ += 4;
  }
  std::vector<std::uint8_t> bytes(std::size_t n) {
    need(n, "byte run");
    std::vector<std::uint8_t> v(in_.begin() + static_cast<std::ptrdiff_t>(pos_),
                                in_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
    pos_ += n;
    return v;
  }
  bool at_end() const { return pos_ == in_.size(); }

 private:
  void need(std::size_t n, const char* what) const {
    if (in_.size() - pos_ < n) throw FormatError(std::string("truncated container reading ") + what);
  }
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

void write_image(Writer& w, const Image& img) {
  w.magic(kImageMagic);
  w.u32(kVersion);
  w.u32(img.text_base);
  w.u32(img.entry);
  w.u32(img.data_base);
  w.u32(static_cast<std::uint32_t>(img.text.size()));
  w.u32(static_cast<std::uint32_t>(img.data.size()));
  w.u32(static_cast<std::uint32_t>(img.cfg.blocks.size()));
  w.u32(static_cast<std::uint32_t>(img.cfg.edges.size()));
  for (const auto& b : img.cfg.blocks) {
    w.u32(b.entry_addr);
    w.u32(b.length_words);
  }
  for (const auto& e : img.cfg.edges) {
    w.u32(e.source);
    w.u32(e.target);
    w.u32(static_cast<std::uint32_t>(e.kind));
  }
  w.bytes(img.text);
  w.bytes(img.data);
}

Image read_image(Reader& r) {
  r.magic(kImageMagic);
  if (const auto v = r.u32(); v != kVersion) throw FormatError("unsupported image version " + std::to_string(v));
  Image img;
  img.text_base = r.u32();
  img.entry = r.u32();
  img.data_base = r.u32();
  const auto text_len = r.u32();
  const auto data_len = r.u32();
  const auto nblocks = r.u32();
  const auto nedges = r.u32();
  if (text_len % 4 != 0) throw FormatError("text length is not a multiple of 4");
  for (std::uint32_t i = 0; i < nblocks; ++i) {
    BasicBlock b;
    b.id = i;
    b.entry_addr = r.u32();
    b.length_words = r.u32();
    img.cfg.blocks.push_back(b);
  }
  for (std::uint32_t i = 0; i < nedges; ++i) {
    Edge e;
    e.source = r.u32();
    e.target = r.u32();
    const auto kind = r.u32();
    if (e.source >= nblocks || e.target >= nblocks || kind > static_cast<std::uint32_t>(EdgeKind::Indirect)) {
      throw FormatError("malformed edge record");
    }
    e.kind = static_cast<EdgeKind>(kind);
    img.cfg.edges.push_back(e);
  }
  img.text = r.bytes(text_len);
  img.data = r.bytes(data_len);
  return img;
}

}  // namespace

std::vector<std::uint8_t> serialize(const Image& image) {
  Writer w;
  write_image(w, image);
  return w.take();
}

std::vector<std::uint8_t> serialize(const crypto::EncryptedImage& e) {
  Writer w;
  write_image(w, e.image);
  w.magic(kPatchMagic);
  w.u32(static_cast<std::uint32_t>(e.patch_table.size()));
  for (const auto& p : e.patch_table) {
    w.u32(p.source_block);
    w.u32(p.target_entry);
    w.bytes(p.patch.bytes);
  }
  w.magic(kEntryKeyMagic);
  w.bytes(e.entry_key.bytes);
  return w.take();
}

Container parse_container(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  Image img = read_image(r);
  if (r.at_end()) return img;
  crypto::EncryptedImage e;
  e.image = std::move(img);
  r.magic(kPatchMagic);
  const auto n = r.u32();
  for (std::uint32_t i = 0; i < n; ++i) {
    crypto::EdgePatch p;
    p.source_block = r.u32();
    p.target_entry = r.u32();
    const auto raw = r.bytes(16);
    std::copy(raw.begin(), raw.end(), p.patch.bytes.begin());
    e.patch_table.push_back(p);
  }
  r.magic(kEntryKeyMagic);
  const auto raw = r.bytes(16);
  std::copy(raw.begin(), raw.end(), e.entry_key.bytes.begin());
  if (!r.at_end()) throw FormatError("trailing bytes after entry key");
  return e;
}

Image parse_image(std::span<const std::uint8_t> bytes) {
  auto c = parse_container(bytes);
  if (auto* img = std::get_if<Image>(&c)) return std::move(*img);
  throw FormatError("expected a plaintext image, found an encrypted one");
}

crypto::EncryptedImage parse_encrypted(std::span<const std::uint8_t> bytes) {
  auto c = parse_container(bytes);
  if (auto* e = std::get_if<crypto::EncryptedImage>(&c)) return std::move(*e);
  throw FormatError("expected an encrypted image, found a plaintext one");
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("write failed for " + path.string());
}

}  // namespace isrlab
