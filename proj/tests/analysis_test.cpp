#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "isrlab/analysis.hpp"
#include "isrlab/isa.hpp"
#include "support.hpp"

using namespace isrlab;
using namespace isrlab::analysis;
namespace ts = testing_support;

namespace {

double entropy_of_counts(const std::vector<std::uint64_t>& counts) {
  std::vector<std::uint8_t> bytes;
  for (std::size_t v = 0; v < counts.size(); ++v) bytes.insert(bytes.end(), counts[v], static_cast<std::uint8_t>(v));
  return byte_entropy(bytes);
}

// Geometric(1 - p) sampler built from uniform draws alone: keep drawing
// until a draw exceeds p; the number of draws is the latency.
std::vector<std::uint64_t> geometric_samples(double p, std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<std::uint64_t> out;
  for (std::size_t i = 0; i < n; ++i) {
    std::uint64_t k = 1;
    while (u(rng) < p) ++k;
    out.push_back(k);
  }
  return out;
}

}  // namespace

TEST(Entropy, Examples) {
  EXPECT_EQ(byte_entropy(std::vector<std::uint8_t>(1024, 0)), 0.0);
  std::vector<std::uint8_t> all(256);
  for (int i = 0; i < 256; ++i) all[i] = static_cast<std::uint8_t>(i);
  EXPECT_DOUBLE_EQ(byte_entropy(all), 8.0);
  EXPECT_DOUBLE_EQ(byte_entropy(std::vector<std::uint8_t>{1, 2, 1, 2}), 1.0);
  EXPECT_THROW(byte_entropy(std::vector<std::uint8_t>{}), Error);
}

TEST(EntropyProperty, BoundedAndMonotoneUnderFlattening) {
  ts::SplitMix g(31);
  for (int n = 0; n < 500; ++n) {
    std::vector<std::uint64_t> c(2 + g.below(30));
    for (auto& v : c) v = g.below(50);
    c[0] += 1;
    const double h = entropy_of_counts(c);
    EXPECT_GE(h, 0.0);
    EXPECT_LE(h, std::log2(static_cast<double>(c.size())) + 1e-12);
    // Move one unit from a larger count to a smaller one (never past equality).
    const auto i = g.below(c.size()), j = g.below(c.size());
    if (c[i] >= c[j] + 2) {
      --c[i];
      ++c[j];
      EXPECT_GE(entropy_of_counts(c), h - 1e-12);
    }
  }
}

TEST(SurvivalModel, Examples) {
  EXPECT_DOUBLE_EQ(survival_model(0.5, 3), 0.125);
  EXPECT_EQ(survival_model(0.3, 0), 1.0);
  EXPECT_EQ(survival_model(0.0, 0), 1.0);
  EXPECT_EQ(survival_model(0.0, 1), 0.0);
  EXPECT_THROW(survival_model(1.5, 1), Error);
  EXPECT_THROW(survival_model(-0.1, 1), Error);
}

TEST(SurvivalModelProperty, Multiplicative) {
  ts::SplitMix g(41);
  for (int n = 0; n < 1000; ++n) {
    const double p = static_cast<double>(g.below(1000001)) / 1e6;
    const auto a = g.below(20), b = g.below(20);
    EXPECT_NEAR(survival_model(p, a + b), survival_model(p, a) * survival_model(p, b), 1e-12);
  }
}

TEST(FitSurvival, GeometricSamplerIsWithinBounds) {
  // The 3-sigma normal bound is only meaningful where n p^k is not tiny, so
  // the sample size is large enough to populate k = 8 at p = 0.5.
  for (double p : {isa::exact_valid_decode_fraction(), 0.5}) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const auto s = geometric_samples(p, 20000, seed);
      const auto fit = fit_survival(s, p);
      EXPECT_TRUE(fit.within_bounds) << p << " seed " << seed << " dev " << fit.max_abs_deviation;
      ASSERT_EQ(fit.points.size(), 4u);
      EXPECT_EQ(fit.points[3].k, 8u);
    }
  }
}

TEST(FitSurvival, DegenerateCases) {
  const std::vector<std::uint64_t> ones(200, 1);
  const auto a = fit_survival(ones, 0.0);
  EXPECT_EQ(a.max_abs_deviation, 0.0);
  EXPECT_TRUE(a.within_bounds);

  const std::vector<std::uint64_t> censored(200, 1000000);
  const auto b = fit_survival(censored, 0.0);
  EXPECT_EQ(b.max_abs_deviation, 1.0);
  EXPECT_FALSE(b.within_bounds);
  EXPECT_THROW(fit_survival({}, 0.1), Error);
}

TEST(FitSurvival, DetectsWrongModel) {
  const auto s = geometric_samples(0.5, 5000, 3);
  EXPECT_FALSE(fit_survival(s, 0.1).within_bounds);
}

TEST(Diversification, RepeatedInstructionDiversified) {
  std::string text;
  for (int i = 0; i < 255; ++i) text += "addi a0, a0, 1\n";
  text += "ecall\n";
  const auto img = layout_image(parse_assembly(text));
  const auto d = diversification_report(img, ts::encrypt(img, 8));
  EXPECT_EQ(d.repeated_instruction_diversification, 1.0);
  EXPECT_EQ(d.repeated_pairs, 255u * 254u / 2u);
  EXPECT_EQ(d.distinct_ciphertext_words_fraction, 1.0);
  EXPECT_GT(d.ciphertext_entropy, d.plaintext_entropy);
}

TEST(Diversification, VacuousCaseReportsOne) {
  const auto img = layout_image(parse_assembly("addi a0, zero, 1\naddi a1, zero, 2\necall\n"));
  const auto d = diversification_report(img, ts::encrypt(img));
  EXPECT_EQ(d.repeated_pairs, 0u);
  EXPECT_EQ(d.repeated_instruction_diversification, 1.0);
}

TEST(Diversification, FibCiphertextHasHigherEntropy) {
  const auto img = ts::load_image("fib");
  const auto d = diversification_report(img, ts::encrypt(img, 42));
  EXPECT_GT(d.ciphertext_entropy, d.plaintext_entropy);
  EXPECT_DOUBLE_EQ(d.valid_decode_p, isa::exact_valid_decode_fraction());
}

TEST(Diversification, MismatchRejected) {
  EXPECT_THROW(diversification_report(ts::load_image("fib"), ts::encrypt(ts::load_image("gcd"))), Error);
}

TEST(DiversificationProperty, CorpusEntropyNeverDrops) {
  for (const auto& name : ts::corpus_names()) {
    const auto img = ts::load_image(name);
    const auto d = diversification_report(img, ts::encrypt(img, 6));
    EXPECT_GE(d.ciphertext_entropy, d.plaintext_entropy) << name;
    EXPECT_EQ(d.repeated_instruction_diversification, 1.0) << name;
  }
}
