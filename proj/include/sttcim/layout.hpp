#pragma once

#include <cstdint>
#include <string>
#include <utility>

#include "sttcim/common.hpp"
#include "sttcim/config.hpp"

namespace sttcim {

/// Word address as seen by the processor (one address per word).
using Address = std::uint32_t;

/// Geometry of the scratchpad. The last row of every bank is the spare row
/// and is not part of the linear address space.
struct ArrayConfig {
  unsigned banks = 4;
  unsigned rows_per_bank = 1025;
  unsigned words_per_row = 8;
  unsigned word_width = 32;
  unsigned vector_length = 8;

  unsigned user_rows() const { return rows_per_bank - 1; }
  unsigned spare_row() const { return rows_per_bank - 1; }
  unsigned bits_per_row() const { return word_width * words_per_row; }

  void validate() const {
    if (banks == 0 || rows_per_bank < 2 || words_per_row == 0) {
      throw ConfigError("array needs at least one bank, two rows per bank and one word per row");
    }
    if (word_width == 0 || word_width > 32) throw ConfigError("word_width must be in [1, 32]");
    if (vector_length != 1 && vector_length != 4 && vector_length != 8) {
      throw ConfigError("vector_length must be 1, 4 or 8");
    }
    if (vector_length > words_per_row) throw ConfigError("vector_length exceeds words per row");
  }

  bool operator==(const ArrayConfig&) const = default;
};

/// Physical position of one word slot.
struct Location {
  unsigned bank = 0;
  unsigned row = 0;
  unsigned group = 0;  ///< column group (word slot within the row)

  bool operator==(const Location&) const = default;
};

/// Bank-major, then row, then column group. Spare-row slots are reachable
/// through a window starting at `spare_base()`, one slot per (bank, group).
class AddressLayout {
 public:
  AddressLayout() = default;
  explicit AddressLayout(ArrayConfig cfg) : cfg_(cfg) { cfg_.validate(); }

  const ArrayConfig& config() const { return cfg_; }

  unsigned words_per_bank() const { return cfg_.user_rows() * cfg_.words_per_row; }
  Address capacity() const { return cfg_.banks * words_per_bank(); }
  Address spare_base() const { return capacity(); }
  Address spare_window() const { return cfg_.banks * cfg_.words_per_row; }
  Address end() const { return spare_base() + spare_window(); }

  bool is_user(Address a) const { return a < capacity(); }
  bool is_spare(Address a) const { return a >= spare_base() && a < end(); }
  bool valid(Address a) const { return a < end(); }

  Location locate(Address a) const {
    if (is_user(a)) {
      const unsigned wpr = cfg_.words_per_row;
      return {a / words_per_bank(), (a % words_per_bank()) / wpr, a % wpr};
    }
    if (is_spare(a)) {
      const Address off = a - spare_base();
      return {off / cfg_.words_per_row, cfg_.spare_row(), off % cfg_.words_per_row};
    }
    throw AddressError("address " + std::to_string(a) + " outside the scratchpad");
  }

  Address address_of(const Location& l) const {
    if (l.bank >= cfg_.banks || l.row >= cfg_.rows_per_bank || l.group >= cfg_.words_per_row) {
      throw AddressError("location outside the array");
    }
    if (l.row == cfg_.spare_row()) return spare_address(l.bank, l.group);
    return l.bank * words_per_bank() + l.row * cfg_.words_per_row + l.group;
  }

  Address spare_address(unsigned bank, unsigned group) const {
    return spare_base() + bank * cfg_.words_per_row + group;
  }

  /// Address of the spare-row slot aligned with `a`.
  Address spare_partner(Address a) const {
    Location l = locate(a);
    return spare_address(l.bank, l.group);
  }

  bool operator==(const AddressLayout&) const = default;

 private:
  ArrayConfig cfg_{};
};

/// Reads array geometry keys; absent keys keep their current values.
inline void apply_config(const KeyValueConfig& cfg, ArrayConfig& a) {
  const std::pair<const char*, unsigned*> keys[] = {{"banks", &a.banks},
                                                    {"rows_per_bank", &a.rows_per_bank},
                                                    {"words_per_row", &a.words_per_row},
                                                    {"word_width", &a.word_width},
                                                    {"vector_length", &a.vector_length}};
  for (auto [key, field] : keys) {
    int v = static_cast<int>(*field);
    cfg.get(key, v);
    if (v < 0) throw ConfigError(std::string("key '") + key + "' must be non-negative");
    *field = static_cast<unsigned>(v);
  }
  a.validate();
}

}  // namespace sttcim
