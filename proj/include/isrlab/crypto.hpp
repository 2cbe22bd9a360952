#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "isrlab/error.hpp"
#include "isrlab/program.hpp"

namespace isrlab::crypto {

struct Key128 {
  std::array<std::uint8_t, 16> bytes{};

  /// Exactly 32 hex digits; throws Error otherwise.
  static Key128 from_hex(std::string_view hex);
  std::string hex() const;
  bool is_zero() const;

  friend Key128 operator^(const Key128& a, const Key128& b) {
    Key128 r;
    for (std::size_t i = 0; i < 16; ++i) r.bytes[i] = a.bytes[i] ^ b.bytes[i];
    return r;
  }
  friend auto operator<=>(const Key128&, const Key128&) = default;
};

using BlockKey = Key128;

struct EdgePatch {
  BlockId source_block = 0;
  Addr target_entry = 0;
  Key128 patch;
  friend bool operator==(const EdgePatch&, const EdgePatch&) = default;
};

using PatchKey = std::pair<BlockId, Addr>;

struct KeySchedule {
  Key128 master_seed;
  std::vector<BlockKey> block_keys;  // indexed by block id
  std::map<PatchKey, EdgePatch> patches;
  BlockKey entry_key;

  const BlockKey& key(BlockId id) const { return block_keys.at(id); }
  friend bool operator==(const KeySchedule&, const KeySchedule&) = default;
};

struct EncryptedImage {
  Image image;  // text holds ciphertext
  std::vector<EdgePatch> patch_table;  // sorted by (source_block, target_entry)
  BlockKey entry_key;
  friend bool operator==(const EncryptedImage&, const EncryptedImage&) = default;
};

class ScheduleError : public Error {
 public:
  using Error::Error;
};

// AES-128 in ECB mode over single blocks, backed by OpenSSL. Holds the
// expanded key, so keep one alive while a key is in use.
class Aes128 {
 public:
  explicit Aes128(const Key128& key);
  ~Aes128();
  Aes128(Aes128&&) noexcept;
  Aes128& operator=(Aes128&&) noexcept;
  Aes128(const Aes128&) = delete;
  Aes128& operator=(const Aes128&) = delete;

  std::array<std::uint8_t, 16> encrypt(const std::array<std::uint8_t, 16>& block) const;

 private:
  struct Ctx;
  std::unique_ptr<Ctx> ctx_;
};

// PRF inputs are one AES block with a domain tag in the last byte:
//   block key:  AES(master, LE64(block_id) || 0^7 || 0x01)
//   keystream:  AES(key,    LE32(offset)   || 0^11 || 0x02), first 4 bytes LE
BlockKey block_key(const Key128& master_seed, BlockId id);
std::uint32_t keystream_word(const BlockKey& key, std::uint32_t word_offset);

/// Keystream generator bound to one key; reuses the expanded AES schedule.
class Keystream {
 public:
  explicit Keystream(const BlockKey& key) : key_(key), aes_(key) {}
  std::uint32_t word(std::uint32_t word_offset) const;
  const BlockKey& key() const { return key_; }

 private:
  BlockKey key_;
  Aes128 aes_;
};

/// Block 0 is the entry block (the image entry is always the first
/// instruction).
KeySchedule gen_keys(const ControlFlowGraph& cfg, const Key128& master_seed);

inline BlockKey derive_next_key(const BlockKey& current, const Key128& patch) { return current ^ patch; }

/// Throws ScheduleError if the schedule was generated for a different CFG.
EncryptedImage encrypt_image(const Image& image, const KeySchedule& schedule);

/// Inverse of encrypt_image given the same schedule.
Image decrypt_image(const EncryptedImage& eimage, const KeySchedule& schedule);

}  // namespace isrlab::crypto
