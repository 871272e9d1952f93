#pragma once

// Property suites behind the `array selftest` and `ecc prove` commands.

#include <algorithm>
#include <cstdint>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "sttcim/array.hpp"
#include "sttcim/device.hpp"
#include "sttcim/ecc.hpp"

namespace sttcim::selftest {

struct Check {
  std::string name;
  bool pass = false;
  std::string detail;
};

inline bool all_pass(const std::vector<Check>& checks) {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

inline void print(std::ostream& out, const std::vector<Check>& checks) {
  for (const auto& c : checks) {
    out << (c.pass ? "PASS " : "FAIL ") << c.name;
    if (!c.detail.empty()) out << " (" << c.detail << ")";
    out << '\n';
  }
}

/// Logical function each op must realize on one column.
inline bool expected_bit(array::CimOp op, bool a, bool b) {
  using array::CimOp;
  switch (op) {
    case CimOp::Read: return a;
    case CimOp::Not: return !a;
    case CimOp::And: return a && b;
    case CimOp::Or: return a || b;
    case CimOp::Nand: return !(a && b);
    case CimOp::Nor: return !(a || b);
    case CimOp::Xor: return a != b;
    case CimOp::Add: return a != b;  // sum bit with no carry-in
  }
  return false;
}

inline std::vector<Check> array_suite(const device::DeviceParams& params, std::uint64_t seed,
                                      std::uint32_t random_add_pairs = 100000) {
  using array::CimOp;
  std::vector<Check> out;

  {
    unsigned bad = 0;
    for (int ab = 0; ab < 4; ++ab) {
      const bool a = ab & 2, b = ab & 1;
      const array::ColumnSense want{a || b, !(a || b), a && b, !(a && b), a != b};
      if (array::sense_column(a, b) != want) ++bad;
      if (array::sense_column_analog(params, a, b) != want) ++bad;
    }
    out.push_back({"sensing truth table (4 state combinations, logical and electrical)", bad == 0,
                   bad ? std::to_string(bad) + " mismatches" : ""});
  }

  {
    unsigned bad = 0;
    for (CimOp op : array::kAllOps) {
      if (array::decode_cim_type(array::encode(op)) != op) ++bad;
      for (int ab = 0; ab < 4; ++ab) {
        const bool a = ab & 2, b = ab & 1;
        const auto r = array::compute(op, a, b, 1, 1);
        if (static_cast<bool>(r.output & 1u) != expected_bit(op, a, b)) ++bad;
      }
    }
    out.push_back({"control decode drives the output mux to the selected function (8 CiMTypes)", bad == 0,
                   bad ? std::to_string(bad) + " mismatches" : ""});
  }

  {
    // The stack patterns each op enables must select the comparator it reads.
    unsigned bad = 0;
    for (CimOp op : array::kAllOps) {
      const auto c = array::decode_controls(op);
      const auto used = [](const std::array<bool, 3>& e) { return e != std::array<bool, 3>{}; };
      if (array::is_two_operand(op)) {
        if (used(c.rwl) && c.rwl != device::kOrRef && c.rwl != device::kAndRef) ++bad;
        if (used(c.rwr) && c.rwr != device::kOrRef && c.rwr != device::kAndRef) ++bad;
      } else if (c.rwl != device::kReadRef && c.rwr != device::kReadRef) {
        ++bad;
      }
    }
    out.push_back({"reference enables match the comparator each op needs", bad == 0, ""});
  }

  {
    std::uint64_t bad = 0;
    for (unsigned a = 0; a < 256; ++a) {
      for (unsigned b = 0; b < 256; ++b) {
        const auto r = array::compute(CimOp::Add, a, b, 8, 8);
        if (r.value + (static_cast<unsigned>(r.carry_out) << 8) != a + b) ++bad;
      }
    }
    out.push_back({"ADD exhaustive 8-bit (65536 pairs)", bad == 0, bad ? std::to_string(bad) + " wrong" : ""});
  }

  {
    std::mt19937_64 rng(seed);
    std::uint64_t bad = 0;
    for (std::uint32_t i = 0; i < random_add_pairs; ++i) {
      const std::uint32_t a = static_cast<std::uint32_t>(rng()), b = static_cast<std::uint32_t>(rng());
      const auto r = array::compute(CimOp::Add, a, b, 32, 32);
      const std::uint64_t got = r.value | (static_cast<std::uint64_t>(r.carry_out) << 32);
      if (got != std::uint64_t{a} + b) ++bad;
    }
    out.push_back({"ADD random 32-bit (" + std::to_string(random_add_pairs) + " pairs)", bad == 0,
                   bad ? std::to_string(bad) + " wrong" : ""});
  }
  return out;
}

namespace detail {

/// Calls f(mask) for every weight-w pattern over n bits.
template <class F>
void for_each_weight(unsigned n, unsigned w, F&& f) {
  std::vector<unsigned> idx(w);
  for (unsigned i = 0; i < w; ++i) idx[i] = i;
  if (w > n) return;
  while (true) {
    Codeword m = 0;
    for (unsigned i : idx) m |= Codeword{1} << i;
    f(m);
    int i = static_cast<int>(w) - 1;
    while (i >= 0 && idx[i] == n - w + static_cast<unsigned>(i)) --i;
    if (i < 0) return;
    ++idx[i];
    for (unsigned j = static_cast<unsigned>(i) + 1; j < w; ++j) idx[j] = idx[j - 1] + 1;
  }
}

inline Codeword random_pattern(std::mt19937_64& rng, unsigned n, unsigned w) {
  Codeword m = 0;
  while (static_cast<unsigned>(std::popcount(m)) < w) m |= Codeword{1} << (rng() % n);
  return m;
}

}  // namespace detail

inline std::vector<Check> code_suite(ecc::CodeKind kind, std::uint64_t seed, std::uint32_t random_trials = 10000) {
  std::vector<Check> out;
  const ecc::CodeSpec small = ecc::CodeSpec::make(kind, 8);
  const ecc::CodeSpec full = ecc::CodeSpec::make(kind, 32);
  const std::string tag = std::string(ecc::to_string(kind)) + ": ";
  const unsigned t = full.correctable();

  {
    std::uint64_t bad = 0;
    for (Word a = 0; a < 256; ++a) {
      for (Word b = 0; b < 256; ++b) {
        const auto d = small.decode(small.encode(a) ^ small.encode(b));
        if (d.status != ecc::DecodeStatus::Clean || d.data != (a ^ b)) ++bad;
      }
    }
    out.push_back({tag + "XOR closure exhaustive at 8 data bits", bad == 0, ""});
  }

  auto correct_ok = [](const ecc::CodeSpec& c, Word data, Codeword e) {
    const auto d = c.decode(c.encode(data) ^ e);
    return d.status == ecc::DecodeStatus::Corrected && d.data == data && d.error_mask == e;
  };
  auto flagged = [](const ecc::CodeSpec& c, Word data, Codeword e) {
    return c.decode(c.encode(data) ^ e).status == ecc::DecodeStatus::DetectedUncorrectable;
  };

  std::mt19937_64 rng(seed ^ (kind == ecc::CodeKind::Secded ? 0x5EC : 0xEC3));
  {
    std::uint64_t bad = 0, total = 0;
    for (unsigned w = 1; w <= t; ++w) {
      detail::for_each_weight(small.code_bits(), w, [&](Codeword e) {
        ++total;
        if (!correct_ok(small, static_cast<Word>(rng() & 0xFF), e)) ++bad;
      });
    }
    out.push_back({tag + "corrects every weight<=" + std::to_string(t) + " pattern at n=" +
                       std::to_string(small.code_bits()),
                   bad == 0, std::to_string(total) + " patterns"});
  }
  {
    std::uint64_t bad = 0;
    for (std::uint32_t i = 0; i < random_trials; ++i) {
      const unsigned w = 1 + static_cast<unsigned>(rng() % t);
      if (!correct_ok(full, static_cast<Word>(rng()), detail::random_pattern(rng, full.code_bits(), w))) ++bad;
    }
    out.push_back({tag + "corrects random weight<=" + std::to_string(t) + " patterns at n=" +
                       std::to_string(full.code_bits()),
                   bad == 0, std::to_string(random_trials) + " trials"});
  }
  {
    std::uint64_t bad = 0, total = 0;
    detail::for_each_weight(small.code_bits(), t + 1, [&](Codeword e) {
      ++total;
      if (!flagged(small, static_cast<Word>(rng() & 0xFF), e)) ++bad;
    });
    for (std::uint32_t i = 0; i < random_trials; ++i, ++total) {
      if (!flagged(full, static_cast<Word>(rng()), detail::random_pattern(rng, full.code_bits(), t + 1))) ++bad;
    }
    out.push_back({tag + "flags weight-" + std::to_string(t + 1) + " patterns", bad == 0,
                   std::to_string(total) + " patterns"});
  }
  return out;
}

}  // namespace sttcim::selftest
