#include "isrlab/crypto.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cctype>

namespace isrlab::crypto {

Key128 Key128::from_hex(std::string_view hex) {
  if (hex.size() != 32) throw Error("128-bit value must be exactly 32 hex digits");
  Key128 k;
  auto nibble = [&](char c) -> std::uint8_t {
    if (c >= '0' && c <= '9') return static_cast<std::uint8_t>(c - '0');
    const char l = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (l >= 'a' && l <= 'f') return static_cast<std::uint8_t>(l - 'a' + 10);
    throw Error("invalid hex digit '" + std::string(1, c) + "'");
  };
  for (std::size_t i = 0; i < 16; ++i) {
    k.bytes[i] = static_cast<std::uint8_t>(nibble(hex[2 * i]) << 4 | nibble(hex[2 * i + 1]));
  }
  return k;
}

std::string Key128::hex() const {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string s;
  s.reserve(32);
  for (auto b : bytes) {
    s.push_back(kDigits[b >> 4]);
    s.push_back(kDigits[b & 15]);
  }
  return s;
}

bool Key128::is_zero() const {
  return std::all_of(bytes.begin(), bytes.end(), [](std::uint8_t b) { return b == 0; });
}

struct Aes128::Ctx {
  EVP_CIPHER_CTX* ctx = nullptr;
  ~Ctx() { EVP_CIPHER_CTX_free(ctx); }
};

Aes128::Aes128(const Key128& key) : ctx_(std::make_unique<Ctx>()) {
  ctx_->ctx = EVP_CIPHER_CTX_new();
  if (ctx_->ctx == nullptr ||
      EVP_EncryptInit_ex(ctx_->ctx, EVP_aes_128_ecb(), nullptr, key.bytes.data(), nullptr) != 1 ||
      EVP_CIPHER_CTX_set_padding(ctx_->ctx, 0) != 1) {
    throw Error("OpenSSL AES-128 initialisation failed");
  }
}

Aes128::~Aes128() = default;
Aes128::Aes128(Aes128&&) noexcept = default;
Aes128& Aes128::operator=(Aes128&&) noexcept = default;

std::array<std::uint8_t, 16> Aes128::encrypt(const std::array<std::uint8_t, 16>& block) const {
  std::array<std::uint8_t, 16> out{};
  int len = 0;
  if (EVP_EncryptUpdate(ctx_->ctx, out.data(), &len, block.data(), 16) != 1 || len != 16) {
    throw Error("OpenSSL AES-128 encryption failed");
  }
  return out;
}

namespace {

constexpr std::uint8_t kTagBlockKey = 0x01;
constexpr std::uint8_t kTagKeystream = 0x02;

BlockKey block_key_with(const Aes128& prf, BlockId id) {
  std::array<std::uint8_t, 16> in{};
  const std::uint64_t v = id;
  for (int i = 0; i < 8; ++i) in[i] = static_cast<std::uint8_t>(v >> (8 * i));
  in[15] = kTagBlockKey;
  BlockKey k;
  k.bytes = prf.encrypt(in);
  return k;
}

}  // namespace

BlockKey block_key(const Key128& master_seed, BlockId id) {
  return block_key_with(Aes128(master_seed), id);
}

std::uint32_t Keystream::word(std::uint32_t word_offset) const {
  std::array<std::uint8_t, 16> in{};
  for (int i = 0; i < 4; ++i) in[i] = static_cast<std::uint8_t>(word_offset >> (8 * i));
  in[15] = kTagKeystream;
  const auto out = aes_.encrypt(in);
  return static_cast<std::uint32_t>(out[0]) | static_cast<std::uint32_t>(out[1]) << 8 |
         static_cast<std::uint32_t>(out[2]) << 16 | static_cast<std::uint32_t>(out[3]) << 24;
}

std::uint32_t keystream_word(const BlockKey& key, std::uint32_t word_offset) {
  return Keystream(key).word(word_offset);
}

KeySchedule gen_keys(const ControlFlowGraph& cfg, const Key128& master_seed) {
  KeySchedule s;
  s.master_seed = master_seed;
  const Aes128 prf(master_seed);
  auto derive = [&](BlockId id) { return block_key_with(prf, id); };
  s.block_keys.reserve(cfg.blocks.size());
  for (const auto& b : cfg.blocks) s.block_keys.push_back(derive(b.id));
  s.entry_key = cfg.blocks.empty() ? derive(0) : s.block_keys.front();
  for (const auto& e : cfg.edges) {
    const Addr target_entry = cfg.blocks.at(e.target).entry_addr;
    s.patches.insert_or_assign(PatchKey{e.source, target_entry},
                               EdgePatch{e.source, target_entry, s.key(e.source) ^ s.key(e.target)});
  }
  return s;
}

namespace {

void check_consistent(const Image& image, const KeySchedule& schedule) {
  const auto& cfg = image.cfg;
  if (schedule.block_keys.size() != cfg.blocks.size()) {
    throw ScheduleError("schedule has " + std::to_string(schedule.block_keys.size()) +
                        " block keys, image has " + std::to_string(cfg.blocks.size()) + " blocks");
  }
  if (schedule.patches.size() != cfg.edges.size()) {
    throw ScheduleError("schedule patch count does not match CFG edge count");
  }
  for (const auto& e : cfg.edges) {
    if (!schedule.patches.contains(PatchKey{e.source, cfg.blocks.at(e.target).entry_addr})) {
      throw ScheduleError("no patch for CFG edge " + std::to_string(e.source) + " -> " +
                          std::to_string(e.target));
    }
  }
  std::uint64_t words = 0;
  Addr expect = image.text_base;
  for (const auto& b : cfg.blocks) {
    if (b.entry_addr != expect) throw ScheduleError("block table does not tile the text segment");
    expect += 4 * b.length_words;
    words += b.length_words;
  }
  if (words != image.text_words() || image.text.size() % 4 != 0) {
    throw ScheduleError("block table does not cover the text segment");
  }
}

Image xor_text(const Image& image, const KeySchedule& schedule) {
  Image out = image;
  for (const auto& b : image.cfg.blocks) {
    const Keystream ks(schedule.key(b.id));
    const std::size_t first = (b.entry_addr - image.text_base) / 4;
    for (std::uint32_t m = 0; m < b.length_words; ++m) {
      const std::uint32_t w = image.text_word(first + m) ^ ks.word(m);
      for (int i = 0; i < 4; ++i) out.text[(first + m) * 4 + i] = static_cast<std::uint8_t>(w >> (8 * i));
    }
  }
  return out;
}

}  // namespace

EncryptedImage encrypt_image(const Image& image, const KeySchedule& schedule) {
  check_consistent(image, schedule);
  EncryptedImage e;
  e.image = xor_text(image, schedule);
  e.patch_table.reserve(schedule.patches.size());
  for (const auto& [k, p] : schedule.patches) e.patch_table.push_back(p);
  e.entry_key = schedule.entry_key;
  return e;
}

Image decrypt_image(const EncryptedImage& eimage, const KeySchedule& schedule) {
  check_consistent(eimage.image, schedule);
  return xor_text(eimage.image, schedule);
}

}  // namespace isrlab::crypto
