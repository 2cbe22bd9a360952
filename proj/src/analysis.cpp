#include "isrlab/analysis.hpp"

#include <array>
#include <cmath>
#include <unordered_map>
#include <unordered_set>

#include "isrlab/isa.hpp"

namespace isrlab::analysis {

double byte_entropy(std::span<const std::uint8_t> bytes) {
  if (bytes.empty()) throw Error("byte_entropy of an empty sequence");
  std::array<std::uint64_t, 256> hist{};
  for (auto b : bytes) ++hist[b];
  const auto n = static_cast<double>(bytes.size());
  double h = 0;
  for (auto c : hist) {
    if (c == 0) continue;
    const double q = static_cast<double>(c) / n;
    h -= q * std::log2(q);
  }
  return h == 0 ? 0.0 : h;  // no -0.0
}

double survival_model(double p, std::uint64_t k) {
  if (!(p >= 0 && p <= 1)) throw Error("survival_model: p outside [0, 1]");
  if (k == 0) return 1.0;
  return std::pow(p, static_cast<double>(k));
}

DiversificationReport diversification_report(const Image& image, const crypto::EncryptedImage& eimage) {
  const Image& c = eimage.image;
  if (image.text.size() != c.text.size() || image.text_base != c.text_base || image.data != c.data ||
      image.data_base != c.data_base || !(image.cfg == c.cfg)) {
    throw Error("encrypted image was not produced from this image");
  }
  DiversificationReport r;
  r.valid_decode_p = isa::exact_valid_decode_fraction();
  const std::size_t n = image.text_words();
  if (n == 0) return r;

  r.plaintext_entropy = byte_entropy(image.text);
  r.ciphertext_entropy = byte_entropy(c.text);

  std::unordered_set<std::uint32_t> distinct;
  std::uint64_t failures = 0;
  // plaintext word -> (ciphertext word -> count)
  std::unordered_map<std::uint32_t, std::unordered_map<std::uint32_t, std::uint64_t>> groups;
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint32_t pw = image.text_word(i);
    const std::uint32_t cw = c.text_word(i);
    distinct.insert(cw);
    if (!isa::is_legal(cw)) ++failures;
    ++groups[pw][cw];
  }
  r.distinct_ciphertext_words_fraction = static_cast<double>(distinct.size()) / static_cast<double>(n);
  r.ciphertext_decode_failure_fraction = static_cast<double>(failures) / static_cast<double>(n);

  std::uint64_t pairs = 0, same = 0;
  for (const auto& [pw, ciphers] : groups) {
    std::uint64_t total = 0;
    for (const auto& [cw, count] : ciphers) {
      total += count;
      same += count * (count - 1) / 2;
    }
    pairs += total * (total - 1) / 2;
  }
  r.repeated_pairs = pairs;
  r.repeated_instruction_diversification =
      pairs == 0 ? 1.0 : static_cast<double>(pairs - same) / static_cast<double>(pairs);
  return r;
}

SurvivalFit fit_survival(std::span<const std::uint64_t> latencies, double p, std::span<const std::uint64_t> ks) {
  if (latencies.empty()) throw Error("fit_survival needs samples");
  SurvivalFit fit;
  const auto n = static_cast<double>(latencies.size());
  for (auto k : ks) {
    SurvivalPoint pt;
    pt.k = k;
    std::uint64_t alive = 0;
    for (auto l : latencies) alive += l > k ? 1 : 0;
    pt.empirical = static_cast<double>(alive) / n;
    pt.model = survival_model(p, k);
    pt.std_error = std::sqrt(pt.model * (1 - pt.model) / n);
    const double dev = std::abs(pt.empirical - pt.model);
    pt.within = dev <= 3 * pt.std_error;
    fit.max_abs_deviation = std::max(fit.max_abs_deviation, dev);
    fit.within_bounds = fit.within_bounds && pt.within;
    fit.points.push_back(pt);
  }
  return fit;
}

}  // namespace isrlab::analysis
