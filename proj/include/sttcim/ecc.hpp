#pragma once

// Systematic linear codes stored alongside every word:
//   SECDED  - shortened Hamming code plus an overall parity bit (d >= 4)
//   EC3ED4  - shortened binary BCH(63,45), t = 3, over GF(2^6) with primitive
//             polynomial x^6 + x + 1, plus an overall parity bit (d >= 8)
//
// Codeword layout (bit i of a Codeword):
//   [0, k)          data bits
//   [k, k + r)      check bits
//   k + r           overall parity of bits [0, k + r)

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "sttcim/common.hpp"

namespace sttcim::ecc {

enum class CodeKind { Secded, Ec3ed4 };

enum class DecodeStatus { Clean, Corrected, DetectedUncorrectable };

inline const char* to_string(CodeKind k) { return k == CodeKind::Secded ? "SECDED" : "EC3ED4"; }

inline const char* to_string(DecodeStatus s) {
  switch (s) {
    case DecodeStatus::Clean: return "CLEAN";
    case DecodeStatus::Corrected: return "CORRECTED";
    case DecodeStatus::DetectedUncorrectable: return "DETECTED_UNCORRECTABLE";
  }
  return "?";
}

struct DecodeOutcome {
  Word data = 0;
  unsigned corrected = 0;
  DecodeStatus status = DecodeStatus::Clean;
  Codeword error_mask = 0;  ///< bits flipped by the decoder
  Codeword codeword = 0;    ///< received word with error_mask applied

  bool ok() const { return status != DecodeStatus::DetectedUncorrectable; }
};

/// GF(2^6) arithmetic, primitive polynomial x^6 + x + 1.
class GF64 {
 public:
  static constexpr unsigned kOrder = 63;
  static constexpr unsigned kPrimitive = 0x43;

  GF64() {
    unsigned x = 1;
    for (unsigned i = 0; i < kOrder; ++i) {
      exp_[i] = static_cast<std::uint8_t>(x);
      log_[x] = static_cast<std::uint8_t>(i);
      x <<= 1;
      if (x & 0x40) x ^= kPrimitive;
    }
    for (unsigned i = kOrder; i < exp_.size(); ++i) exp_[i] = exp_[i - kOrder];
  }

  unsigned alpha_pow(unsigned e) const { return exp_[e % kOrder]; }
  unsigned log(unsigned x) const { return log_[x]; }

  unsigned mul(unsigned a, unsigned b) const {
    if (a == 0 || b == 0) return 0;
    return exp_[log_[a] + log_[b]];
  }

  unsigned div(unsigned a, unsigned b) const {
    if (b == 0) throw Error("GF64: division by zero");
    if (a == 0) return 0;
    return exp_[(log_[a] + kOrder - log_[b]) % kOrder];
  }

  static const GF64& instance() {
    static const GF64 field;
    return field;
  }

 private:
  std::array<std::uint8_t, 2 * kOrder> exp_{};
  std::array<std::uint8_t, 64> log_{};
};

namespace detail {

// GF(2)[x] polynomials packed into integers; bit i is the x^i coefficient.
inline std::uint64_t gf2_mul(std::uint64_t a, std::uint64_t b) {
  std::uint64_t r = 0;
  while (b) {
    if (b & 1) r ^= a;
    a <<= 1;
    b >>= 1;
  }
  return r;
}

inline int gf2_degree(std::uint64_t p) { return p == 0 ? -1 : 63 - std::countl_zero(p); }

inline std::uint64_t gf2_mod(std::uint64_t a, std::uint64_t m) {
  const int dm = gf2_degree(m);
  for (int d = gf2_degree(a); d >= dm; d = gf2_degree(a)) a ^= m << (d - dm);
  return a;
}

/// Minimal polynomial over GF(2) of alpha^e: product of (x - alpha^(e 2^i))
/// over the cyclotomic coset of e.
inline std::uint64_t minimal_polynomial(unsigned e) {
  const GF64& gf = GF64::instance();
  std::vector<unsigned> coset;
  unsigned c = e % GF64::kOrder;
  do {
    coset.push_back(c);
    c = (2 * c) % GF64::kOrder;
  } while (c != e % GF64::kOrder);
  // Coefficients in GF(64), lowest degree first.
  std::vector<unsigned> poly{1};
  for (unsigned k : coset) {
    const unsigned root = gf.alpha_pow(k);
    std::vector<unsigned> next(poly.size() + 1, 0);
    for (std::size_t i = 0; i < poly.size(); ++i) {
      next[i + 1] ^= poly[i];
      next[i] ^= gf.mul(poly[i], root);
    }
    poly = std::move(next);
  }
  std::uint64_t packed = 0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    if (poly[i] > 1) throw Error("minimal polynomial has non-binary coefficient");
    packed |= static_cast<std::uint64_t>(poly[i]) << i;
  }
  return packed;
}

}  // namespace detail

/// Configuration of one linear code plus the precomputed tables it needs.
class CodeSpec {
 public:
  static CodeSpec secded(unsigned data_bits = 32) {
    if (data_bits == 0 || data_bits > 32) throw ConfigError("SECDED data_bits must be in [1, 32]");
    CodeSpec s;
    s.kind_ = CodeKind::Secded;
    s.k_ = data_bits;
    unsigned r = 2;
    while ((1u << r) < data_bits + r + 1) ++r;
    s.r_ = r;
    s.t_ = 1;
    // Hamming columns: data bits take the non-power-of-two positions in order.
    unsigned pos = 3;
    for (unsigned j = 0; j < data_bits; ++j, ++pos) {
      while (std::has_single_bit(pos)) ++pos;
      s.check_columns_.push_back(pos);
    }
    s.syndrome_to_bit_.assign(std::size_t{1} << r, -1);
    for (unsigned j = 0; j < data_bits; ++j) s.syndrome_to_bit_[s.check_columns_[j]] = static_cast<int>(j);
    for (unsigned i = 0; i < r; ++i) s.syndrome_to_bit_[1u << i] = static_cast<int>(data_bits + i);
    return s;
  }

  static CodeSpec ec3ed4(unsigned data_bits = 32) {
    if (data_bits == 0 || data_bits > 32) throw ConfigError("EC3ED4 data_bits must be in [1, 32]");
    CodeSpec s;
    s.kind_ = CodeKind::Ec3ed4;
    s.k_ = data_bits;
    s.t_ = 3;
    s.generator_ = detail::gf2_mul(detail::gf2_mul(detail::minimal_polynomial(1), detail::minimal_polynomial(3)),
                                   detail::minimal_polynomial(5));
    s.r_ = static_cast<unsigned>(detail::gf2_degree(s.generator_));
    // Data bit j is the coefficient of x^(r + j); its check contribution is
    // x^(r + j) mod g.
    for (unsigned j = 0; j < data_bits; ++j) {
      s.check_columns_.push_back(detail::gf2_mod(std::uint64_t{1} << (s.r_ + j), s.generator_));
    }
    for (unsigned i = 0; i < data_bits + s.r_; ++i) {
      s.degree_of_bit_.push_back(i < data_bits ? s.r_ + i : i - data_bits);
    }
    return s;
  }

  static CodeSpec make(CodeKind kind, unsigned data_bits) {
    return kind == CodeKind::Secded ? secded(data_bits) : ec3ed4(data_bits);
  }

  CodeKind kind() const { return kind_; }
  unsigned data_bits() const { return k_; }
  unsigned check_bits() const { return r_; }
  unsigned code_bits() const { return k_ + r_ + 1; }
  unsigned correctable() const { return t_; }
  /// Generator polynomial (EC3ED4 only), x^i at bit i.
  std::uint64_t generator() const { return generator_; }

  Codeword codeword_mask() const { return low_mask(code_bits()); }
  Word data_of(Codeword c) const { return static_cast<Word>(c & low_mask(k_)); }
  unsigned parity_bit() const { return k_ + r_; }

  Codeword encode(Word data) const {
    if (k_ < 32 && (data >> k_) != 0) throw Error("encode: data does not fit data_bits");
    std::uint64_t check = 0;
    for (unsigned j = 0; j < k_; ++j) {
      if ((data >> j) & 1u) check ^= check_columns_[j];
    }
    Codeword c = static_cast<Codeword>(data) | (check << k_);
    return c | (static_cast<Codeword>(parity(c)) << parity_bit());
  }

  DecodeOutcome decode(Codeword received) const {
    received &= codeword_mask();
    return kind_ == CodeKind::Secded ? decode_secded(received) : decode_bch(received);
  }

  /// Human-readable (n, k, t) triple.
  std::string describe() const {
    return std::string(to_string(kind_)) + " (n=" + std::to_string(code_bits()) + ", k=" + std::to_string(k_) +
           ", t=" + std::to_string(t_) + ")";
  }

 private:
  CodeSpec() = default;

  std::uint64_t recompute_check(Codeword c) const {
    std::uint64_t check = 0;
    for (unsigned j = 0; j < k_; ++j) {
      if ((c >> j) & 1u) check ^= check_columns_[j];
    }
    return check;
  }

  DecodeOutcome finish(Codeword received, Codeword mask) const {
    DecodeOutcome out;
    out.error_mask = mask;
    out.codeword = received ^ mask;
    out.corrected = static_cast<unsigned>(std::popcount(mask));
    out.status = mask == 0 ? DecodeStatus::Clean : DecodeStatus::Corrected;
    out.data = data_of(out.codeword);
    return out;
  }

  DecodeOutcome detected(Codeword received) const {
    DecodeOutcome out;
    out.status = DecodeStatus::DetectedUncorrectable;
    out.codeword = received;
    out.data = data_of(received);
    return out;
  }

  DecodeOutcome decode_secded(Codeword received) const {
    const std::uint64_t syndrome = ((received >> k_) & low_mask(r_)) ^ recompute_check(received);
    const unsigned overall = parity(received);
    if (syndrome == 0) {
      return finish(received, overall ? Codeword{1} << parity_bit() : 0);
    }
    if (!overall) return detected(received);  // even weight, non-zero syndrome
    const int bit = syndrome_to_bit_[syndrome];
    if (bit < 0) return detected(received);   // points into the shortened-away part
    return finish(received, Codeword{1} << bit);
  }

  DecodeOutcome decode_bch(Codeword received) const {
    const GF64& gf = GF64::instance();
    const unsigned n_poly = k_ + r_;
    // Odd syndromes directly; even ones are squares for binary codes.
    std::array<unsigned, 7> s{};
    for (unsigned i = 0; i < n_poly; ++i) {
      if (!((received >> i) & 1u)) continue;
      const unsigned d = degree_of_bit_[i];
      s[1] ^= gf.alpha_pow(d);
      s[3] ^= gf.alpha_pow(3 * d);
      s[5] ^= gf.alpha_pow(5 * d);
    }
    s[2] = gf.mul(s[1], s[1]);
    s[4] = gf.mul(s[2], s[2]);
    s[6] = gf.mul(s[3], s[3]);
    const unsigned overall = parity(received);

    if (s[1] == 0 && s[3] == 0 && s[5] == 0) {
      return finish(received, overall ? Codeword{1} << parity_bit() : 0);
    }

    const std::vector<unsigned> locator = berlekamp_massey(s);
    const unsigned errors = static_cast<unsigned>(locator.size() - 1);
    if (errors > t_) return detected(received);

    // Root search restricted to positions that exist in the shortened code.
    Codeword mask = 0;
    unsigned roots = 0;
    for (unsigned i = 0; i < n_poly; ++i) {
      const unsigned inv = (GF64::kOrder - degree_of_bit_[i]) % GF64::kOrder;
      unsigned value = 0;
      for (std::size_t j = 0; j < locator.size(); ++j) {
        value ^= gf.mul(locator[j], gf.alpha_pow(inv * static_cast<unsigned>(j)));
      }
      if (value == 0) {
        mask |= Codeword{1} << i;
        ++roots;
      }
    }
    if (roots != errors) return detected(received);
    // The overall parity must agree with the number of located errors; any
    // mismatch is one more error on the parity bit itself.
    if ((errors & 1u) != overall) {
      if (errors + 1 > t_) return detected(received);
      mask |= Codeword{1} << parity_bit();
    }
    return finish(received, mask);
  }

  /// Error-locator polynomial (lowest degree first) from syndromes S1..S2t.
  std::vector<unsigned> berlekamp_massey(const std::array<unsigned, 7>& s) const {
    const GF64& gf = GF64::instance();
    std::vector<unsigned> c{1}, b{1};
    unsigned len = 0, shift = 1, last = 1;
    for (unsigned step = 0; step < 2 * t_; ++step) {
      unsigned disc = s[step + 1];
      for (unsigned i = 1; i <= len && i < c.size(); ++i) disc ^= gf.mul(c[i], s[step + 1 - i]);
      if (disc == 0) {
        ++shift;
        continue;
      }
      std::vector<unsigned> prev = c;
      const unsigned scale = gf.div(disc, last);
      if (c.size() < b.size() + shift) c.resize(b.size() + shift, 0);
      for (std::size_t i = 0; i < b.size(); ++i) c[i + shift] ^= gf.mul(scale, b[i]);
      if (2 * len <= step) {
        len = step + 1 - len;
        b = std::move(prev);
        last = disc;
        shift = 1;
      } else {
        ++shift;
      }
    }
    c.resize(len + 1, 0);
    return c;
  }

  CodeKind kind_ = CodeKind::Secded;
  unsigned k_ = 0;
  unsigned r_ = 0;
  unsigned t_ = 0;
  std::uint64_t generator_ = 0;
  std::vector<std::uint64_t> check_columns_;
  std::vector<int> syndrome_to_bit_;
  std::vector<unsigned> degree_of_bit_;
};

/// The CiM XOR output of two stored codewords is itself a codeword, so the
/// ordinary decoder checks it.
inline DecodeOutcome cim_xor_check(const CodeSpec& spec, Codeword xor_sideband) { return spec.decode(xor_sideband); }

}  // namespace sttcim::ecc
