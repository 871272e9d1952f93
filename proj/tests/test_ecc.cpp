#include <gtest/gtest.h>

#include <bit>
#include <random>

#include "sttcim/ecc.hpp"

using namespace sttcim;
using namespace sttcim::ecc;

namespace {

// Textbook Hamming oracle: parity bit i covers positions whose index has
// bit i set, positions numbered from 1 with powers of two reserved for checks.
std::uint32_t hamming_syndrome(Word data, unsigned k) {
  std::uint32_t syn = 0;
  unsigned pos = 3;
  for (unsigned j = 0; j < k; ++j, ++pos) {
    while (std::has_single_bit(pos)) ++pos;
    if ((data >> j) & 1u) syn ^= pos;
  }
  return syn;
}

unsigned weight(Codeword c) { return static_cast<unsigned>(std::popcount(c)); }

}  // namespace

TEST(Ecc, CodeParameters) {
  const auto s = CodeSpec::secded(32), e = CodeSpec::ec3ed4(32);
  EXPECT_EQ(s.code_bits(), 39u);
  EXPECT_EQ(s.correctable(), 1u);
  EXPECT_EQ(e.code_bits(), 51u);
  EXPECT_EQ(e.check_bits(), 18u);
  EXPECT_EQ(e.correctable(), 3u);
  EXPECT_EQ(e.describe(), "EC3ED4 (n=51, k=32, t=3)");
}

TEST(Ecc, SecdedCheckBitsMatchHammingOracle) {
  const auto s = CodeSpec::secded(32);
  std::mt19937_64 rng(1);
  for (int i = 0; i < 2000; ++i) {
    const Word d = static_cast<Word>(rng());
    const Codeword c = s.encode(d);
    EXPECT_EQ(static_cast<std::uint32_t>((c >> 32) & 0x3F), hamming_syndrome(d, 32));
    EXPECT_EQ(weight(c) % 2, 0u);
  }
}

TEST(Ecc, Ec3ed4GeneratorHasDegree18AndDividesCodewords) {
  const auto e = CodeSpec::ec3ed4(32);
  const std::uint64_t g = e.generator();
  EXPECT_EQ(std::bit_width(g) - 1, 18);
  // Polynomial long division over GF(2): the BCH part (without the overall
  // parity bit) of every codeword is a multiple of g.
  auto mod = [&](std::uint64_t a) {
    for (int d = 63; d >= 18; --d) {
      if ((a >> d) & 1u) a ^= g << (d - 18);
    }
    return a;
  };
  std::mt19937_64 rng(2);
  for (int i = 0; i < 500; ++i) {
    const Codeword c = e.encode(static_cast<Word>(rng()));
    // Bit layout: data at x^(18+j), checks at x^i; rotate into polynomial form.
    const std::uint64_t data = c & 0xFFFFFFFFu, check = (c >> 32) & ((1u << 18) - 1);
    EXPECT_EQ(mod((data << 18) | check), 0u);
  }
}

TEST(Ecc, MinimumDistanceAtSmallLength) {
  // Exhaustive over all nonzero 8-bit messages: weight >= 4 for SECDED and
  // >= 8 for EC3ED4.
  for (auto kind : {CodeKind::Secded, CodeKind::Ec3ed4}) {
    const auto c = CodeSpec::make(kind, 8);
    unsigned dmin = 64;
    for (Word d = 1; d < 256; ++d) dmin = std::min(dmin, weight(c.encode(d)));
    EXPECT_EQ(dmin, kind == CodeKind::Secded ? 4u : 8u) << to_string(kind);
  }
}

TEST(Ecc, SecdedCorrectsEverySingleAndFlagsEveryDouble) {
  const auto s = CodeSpec::secded(16);
  const unsigned n = s.code_bits();
  for (unsigned i = 0; i < n; ++i) {
    const auto d = s.decode(s.encode(0xBEEF) ^ (Codeword{1} << i));
    EXPECT_EQ(d.status, DecodeStatus::Corrected);
    EXPECT_EQ(d.data, 0xBEEFu);
    for (unsigned j = i + 1; j < n; ++j) {
      const auto d2 = s.decode(s.encode(0x1234) ^ (Codeword{1} << i) ^ (Codeword{1} << j));
      EXPECT_EQ(d2.status, DecodeStatus::DetectedUncorrectable);
    }
  }
}

TEST(Ecc, Ec3ed4AllTriplesAtShortLength) {
  const auto c = CodeSpec::ec3ed4(4);
  const unsigned n = c.code_bits();
  for (unsigned i = 0; i < n; ++i)
    for (unsigned j = i + 1; j < n; ++j)
      for (unsigned k = j + 1; k < n; ++k) {
        const Codeword e = (Codeword{1} << i) | (Codeword{1} << j) | (Codeword{1} << k);
        const auto d = c.decode(c.encode(0xA) ^ e);
        ASSERT_EQ(d.status, DecodeStatus::Corrected) << i << ' ' << j << ' ' << k;
        EXPECT_EQ(d.error_mask, e);
        EXPECT_EQ(d.corrected, 3u);
      }
}

TEST(Ecc, CleanWordDecodesClean) {
  const auto c = CodeSpec::ec3ed4(32);
  const auto d = c.decode(c.encode(0xCAFEBABE));
  EXPECT_TRUE(d.ok());
  EXPECT_EQ(d.status, DecodeStatus::Clean);
  EXPECT_EQ(d.data, 0xCAFEBABEu);
}

TEST(Ecc, XorSidebandLocatesFlippedColumns) {
  const auto c = CodeSpec::ec3ed4(32);
  const Codeword a = c.encode(0x11111111), b = c.encode(0x0F0F0F0F);
  const Codeword faults = (Codeword{1} << 3) | (Codeword{1} << 40);
  const auto chk = cim_xor_check(c, a ^ b ^ faults);
  EXPECT_EQ(chk.status, DecodeStatus::Corrected);
  EXPECT_EQ(chk.error_mask, faults);
  EXPECT_EQ(chk.data, 0x11111111u ^ 0x0F0F0F0Fu);
}

TEST(Ecc, EncodeRejectsOversizedData) {
  EXPECT_THROW(CodeSpec::secded(8).encode(0x100), Error);
  EXPECT_THROW(CodeSpec::secded(0), ConfigError);
  EXPECT_THROW(CodeSpec::ec3ed4(33), ConfigError);
}
