#pragma once

#include <bit>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

namespace sttcim {

using Word = std::uint32_t;
using Codeword = std::uint64_t;

/// Base for every error the library raises.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid parameters or configuration files.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Address outside the array, or a write to a reserved row.
class AddressError : public Error {
 public:
  using Error::Error;
};

/// Operands of a CiM access that do not share bank and column group.
class AlignmentError : public Error {
 public:
  using Error::Error;
};

inline constexpr std::uint64_t low_mask(unsigned bits) {
  return bits >= 64 ? ~std::uint64_t{0} : ((std::uint64_t{1} << bits) - 1);
}

inline constexpr unsigned parity(std::uint64_t v) {
  return static_cast<unsigned>(std::popcount(v) & 1);
}

/// SplitMix64 finalizer; used to derive independent streams from (seed, index).
inline constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline constexpr std::uint64_t stream_key(std::uint64_t seed, std::uint64_t index) {
  return mix64(seed ^ mix64(index + 0x632be59bd9b4e019ULL));
}

/// Counter-based generator satisfying UniformRandomBitGenerator. Cheap to
/// construct, so every Monte Carlo sample can own one keyed by (seed, index).
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  constexpr explicit SplitMix64(std::uint64_t state = 0) : state_(state) {}
  SplitMix64(std::uint64_t seed, std::uint64_t index) : state_(stream_key(seed, index)) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  constexpr result_type operator()() {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform double in [0, 1).
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

 private:
  std::uint64_t state_;
};

}  // namespace sttcim
