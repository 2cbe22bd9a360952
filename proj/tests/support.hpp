#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "isrlab/container.hpp"
#include "isrlab/crypto.hpp"
#include "isrlab/program.hpp"

namespace testing_support {

inline std::filesystem::path source_dir() { return ISRLAB_SOURCE_DIR; }
inline std::filesystem::path corpus_dir() { return source_dir() / "corpus"; }

inline nlohmann::json load_json(const std::filesystem::path& p) {
  std::ifstream f(p);
  return nlohmann::json::parse(f);
}

inline const nlohmann::json& manifest() {
  static const auto m = load_json(corpus_dir() / "manifest.json");
  return m;
}

inline std::vector<std::string> corpus_names() {
  std::vector<std::string> out;
  for (const auto& [name, _] : manifest().items()) out.push_back(name);
  return out;
}

inline isrlab::Program load_program(const std::string& name) {
  return isrlab::parse_assembly(isrlab::read_text_file(corpus_dir() / (name + ".s")));
}

inline isrlab::Image load_image(const std::string& name, isrlab::Addr text_base = 0) {
  return isrlab::layout_image(load_program(name), text_base);
}

inline isrlab::crypto::Key128 seed_key(std::uint64_t v) {
  isrlab::crypto::Key128 k;
  for (int i = 0; i < 8; ++i) k.bytes[15 - i] = static_cast<std::uint8_t>(v >> (8 * i));
  return k;
}

inline isrlab::crypto::EncryptedImage encrypt(const isrlab::Image& img, std::uint64_t seed = 0) {
  return isrlab::crypto::encrypt_image(img, isrlab::crypto::gen_keys(img.cfg, seed_key(seed)));
}

inline int reg_index(const std::string& abi) {
  static const std::map<std::string, int> names = {
      {"zero", 0}, {"ra", 1}, {"sp", 2}, {"gp", 3}, {"tp", 4}, {"t0", 5}, {"t1", 6}, {"t2", 7},
      {"s0", 8}, {"s1", 9}, {"a0", 10}, {"a1", 11}, {"a2", 12}, {"a3", 13}, {"a4", 14}, {"a5", 15},
      {"a6", 16}, {"a7", 17}, {"s2", 18}, {"s3", 19}, {"s4", 20}, {"s5", 21}, {"s6", 22}, {"s7", 23},
      {"s8", 24}, {"s9", 25}, {"s10", 26}, {"s11", 27}, {"t3", 28}, {"t4", 29}, {"t5", 30}, {"t6", 31}};
  return names.at(abi);
}

// Small deterministic generator for hand-rolled property tests.
struct SplitMix {
  std::uint64_t state;
  explicit SplitMix(std::uint64_t seed) : state(seed) {}
  std::uint64_t next() {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }
  std::uint32_t u32() { return static_cast<std::uint32_t>(next()); }
  std::uint64_t below(std::uint64_t n) { return next() % n; }
  std::int64_t range(std::int64_t lo, std::int64_t hi) {
    return lo + static_cast<std::int64_t>(below(static_cast<std::uint64_t>(hi - lo + 1)));
  }
};

}  // namespace testing_support
