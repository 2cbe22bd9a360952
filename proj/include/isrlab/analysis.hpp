#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "isrlab/crypto.hpp"
#include "isrlab/program.hpp"

namespace isrlab::analysis {

/// Shannon entropy of the byte histogram, in bits per byte. Throws Error on
/// empty input.
double byte_entropy(std::span<const std::uint8_t> bytes);

/// p^k: probability that k consecutive wrong-key fetches all decode legally,
/// treating each fetch as an independent trial. survival_model(p, 0) = 1.
double survival_model(double p, std::uint64_t k);

struct DiversificationReport {
  double plaintext_entropy = 0;
  double ciphertext_entropy = 0;
  double distinct_ciphertext_words_fraction = 0;
  // Over all pairs of text words with equal plaintext, the fraction whose
  // ciphertexts differ. 1.0 when no such pair exists.
  double repeated_instruction_diversification = 1.0;
  std::uint64_t repeated_pairs = 0;
  double ciphertext_decode_failure_fraction = 0;
  double valid_decode_p = 0;
};

/// Throws Error when `eimage` was not produced from `image`.
DiversificationReport diversification_report(const Image& image, const crypto::EncryptedImage& eimage);

struct SurvivalPoint {
  std::uint64_t k = 0;
  double empirical = 0;  // fraction of samples with latency > k
  double model = 0;
  double std_error = 0;  // binomial, sqrt(model (1 - model) / n)
  bool within = false;   // |empirical - model| <= 3 std_error
};

struct SurvivalFit {
  std::vector<SurvivalPoint> points;
  double max_abs_deviation = 0;
  bool within_bounds = true;
};

inline constexpr std::uint64_t kSurvivalKs[] = {1, 2, 4, 8};

/// Compares the empirical survival curve of `latencies` at each k to
/// survival_model(p, k). Samples censored at the step limit count as
/// survivors at every k.
SurvivalFit fit_survival(std::span<const std::uint64_t> latencies, double p,
                         std::span<const std::uint64_t> ks = kSurvivalKs);

}  // namespace isrlab::analysis
