#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "isrlab/crypto.hpp"
#include "isrlab/program.hpp"

namespace isrlab {

class FormatError : public Error {
 public:
  using Error::Error;
};

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes, std::uint64_t h = 0xcbf29ce484222325ull);
std::string hex64(std::uint64_t v);

// Little-endian containers. Layout is documented in docs/formats.md.
std::vector<std::uint8_t> serialize(const Image& image);
std::vector<std::uint8_t> serialize(const crypto::EncryptedImage& eimage);

using Container = std::variant<Image, crypto::EncryptedImage>;

/// A bare "ISR1" payload is an Image; "ISR1" followed by "KEYT" is encrypted.
Container parse_container(std::span<const std::uint8_t> bytes);
Image parse_image(std::span<const std::uint8_t> bytes);
crypto::EncryptedImage parse_encrypted(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace isrlab
