#pragma once

// The STT-CiM bank: codeword storage, dual-row CiM sensing, the CiM decoder
// (control signals per operation), in-array ADD, vector CiM with a reduce
// unit, and the broadcast/replication writes used by data mapping.

#include <array>
#include <concepts>
#include <cstdint>
#include <cstdio>
#include <initializer_list>
#include <ostream>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "sttcim/common.hpp"
#include "sttcim/device.hpp"
#include "sttcim/ecc.hpp"
#include "sttcim/energy.hpp"
#include "sttcim/layout.hpp"

namespace sttcim::array {

/// 3-bit CiMType carried on the bus.
enum class CimOp : std::uint8_t { Read = 0, Not = 1, And = 2, Or = 3, Nand = 4, Nor = 5, Xor = 6, Add = 7 };

inline constexpr std::array<CimOp, 8> kAllOps{CimOp::Read, CimOp::Not,  CimOp::And, CimOp::Or,
                                              CimOp::Nand, CimOp::Nor, CimOp::Xor, CimOp::Add};

inline const char* to_string(CimOp op) {
  static constexpr const char* names[] = {"READ", "NOT", "AND", "OR", "NAND", "NOR", "XOR", "ADD"};
  return names[static_cast<unsigned>(op)];
}

inline unsigned encode(CimOp op) { return static_cast<unsigned>(op); }

inline CimOp decode_cim_type(unsigned bits) {
  if (bits > 7) throw Error("CiMType is a 3-bit field");
  return static_cast<CimOp>(bits);
}

inline bool is_two_operand(CimOp op) { return op != CimOp::Read && op != CimOp::Not; }

/// Reference-stack enables (cells R_REF, R_AP, R_P) and output-mux selects.
struct ControlSignals {
  std::array<bool, 3> rwl{};
  std::array<bool, 3> rwr{};
  std::array<bool, 3> sel{};
  bool sel2_dont_care = false;  ///< emitted as 0

  bool operator==(const ControlSignals&) const = default;
};

inline ControlSignals decode_controls(CimOp op) {
  switch (op) {
    case CimOp::Read: return {{1, 0, 0}, {0, 0, 0}, {1, 1, 0}, true};
    case CimOp::Not: return {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, true};
    case CimOp::And: return {{1, 0, 1}, {0, 0, 0}, {1, 1, 0}, true};
    case CimOp::Or: return {{1, 1, 0}, {0, 0, 0}, {1, 1, 0}, true};
    case CimOp::Nand: return {{0, 0, 0}, {1, 0, 1}, {0, 1, 0}, true};
    case CimOp::Nor: return {{0, 0, 0}, {1, 1, 0}, {0, 1, 0}, true};
    case CimOp::Xor: return {{1, 1, 0}, {1, 0, 1}, {0, 0, 1}, false};
    case CimOp::Add: return {{1, 1, 0}, {1, 0, 1}, {0, 0, 0}, false};
  }
  throw Error("invalid CiM op");
}

/// All outputs of the two sense amplifiers for one column.
struct ColumnSense {
  bool o_or = false, o_nor = false, o_and = false, o_nand = false, o_xor = false;
  bool operator==(const ColumnSense&) const = default;
};

/// Logical outputs for stored bits a, b (1 = parallel / low resistance).
inline ColumnSense sense_column(bool a, bool b) {
  ColumnSense s;
  s.o_or = a || b;
  s.o_nor = !s.o_or;
  s.o_and = a && b;
  s.o_nand = !s.o_and;
  s.o_xor = !(s.o_and || s.o_nor);
  return s;
}

/// The same outputs derived electrically: the source-line current is
/// compared against references built from the stack cells enabled by the
/// XOR row of the decoder (left stack gives the OR reference, right stack the
/// AND reference).
inline ColumnSense sense_column_analog(const device::DeviceParams& p, bool a, bool b) {
  const device::CurrentLevels lv = device::current_levels(p);
  const device::ReferenceStack stack = device::nominal_stack(p);
  const ControlSignals xor_ctl = decode_controls(CimOp::Xor);
  const double i_sl = (a ? lv.i_p : lv.i_ap) + (b ? lv.i_p : lv.i_ap);
  ColumnSense s;
  s.o_or = device::sense_bit(i_sl, stack.current(xor_ctl.rwl));
  s.o_nor = !s.o_or;
  s.o_and = device::sense_bit(i_sl, stack.current(xor_ctl.rwr));
  s.o_nand = !s.o_and;
  s.o_xor = !(s.o_and || s.o_nor);
  return s;
}

namespace detail {

// Which comparator a stack-enable pattern realizes.
enum class RefKind { None, Read, Or, And };

inline RefKind ref_kind(const std::array<bool, 3>& en) {
  if (en == device::kReadRef) return RefKind::Read;
  if (en == device::kOrRef) return RefKind::Or;
  if (en == device::kAndRef) return RefKind::And;
  return RefKind::None;
}

/// Comparator outputs for every column of a word slot, as bit masks.
struct Comparators {
  Codeword single = 0;  ///< single-cell read decision (one wordline)
  Codeword o_or = 0;    ///< I_SL > I_ref-or
  Codeword o_and = 0;   ///< I_SL > I_ref-and
};

inline Codeword pick(RefKind k, const Comparators& c) {
  switch (k) {
    case RefKind::Read: return c.single;
    case RefKind::Or: return c.o_or;
    case RefKind::And: return c.o_and;
    case RefKind::None: return 0;
  }
  return 0;
}

/// Ripple-carry adder over the first `width` columns using the XOR and AND
/// outputs: S_n = X_n ^ C_{n-1}, C_n = A_n | (X_n & C_{n-1}), C_{-1} = 0.
inline Codeword ripple_add(Codeword x, Codeword a, unsigned width, bool& carry_out) {
  Codeword sum = 0;
  bool carry = false;
  for (unsigned n = 0; n < width; ++n) {
    const bool xn = (x >> n) & 1u, an = (a >> n) & 1u;
    sum |= static_cast<Codeword>(xn != carry) << n;
    carry = an || (xn && carry);
  }
  carry_out = carry;
  return sum;
}

}  // namespace detail

/// Result of one scalar CiM access.
struct WordResult {
  Word value = 0;
  bool carry_out = false;
  Codeword xor_sideband = 0;  ///< XOR of every column; for NOT, the sensed stored word
  Codeword output = 0;        ///< mux output across all columns before data extraction
  unsigned accesses_used = 1;

  bool operator==(const WordResult&) const = default;
};

/// Applies the output mux of `controls` to the comparator outputs.
inline WordResult select_output(CimOp op, const detail::Comparators& cmp, unsigned data_bits, unsigned code_bits) {
  const ControlSignals ctl = decode_controls(op);
  const Codeword mask = low_mask(code_bits);
  const Codeword left = detail::pick(detail::ref_kind(ctl.rwl), cmp);
  const Codeword right = detail::pick(detail::ref_kind(ctl.rwr), cmp);
  WordResult r;
  if (is_two_operand(op)) {
    r.xor_sideband = cmp.o_or & ~cmp.o_and & mask;
  } else {
    r.xor_sideband = cmp.single & mask;
  }
  const bool s0 = ctl.sel[0], s1 = ctl.sel[1], s2 = ctl.sel[2] && !ctl.sel2_dont_care;
  if (s0 && s1) {
    r.output = left;                  // left amplifier, positive output
  } else if (!s0 && s1) {
    r.output = ~right & mask;         // right amplifier, negative output
  } else if (s2) {
    r.output = ~(right | (~left & mask)) & mask;  // O_AND NOR O_NOR
  } else {
    const Codeword x = ~(right | (~left & mask)) & mask;
    r.output = detail::ripple_add(x, right, data_bits, r.carry_out);
  }
  r.value = static_cast<Word>(r.output & low_mask(data_bits));
  return r;
}

/// Error-free result of `op` on two stored codewords (b ignored for READ/NOT).
inline WordResult compute(CimOp op, Codeword a, Codeword b, unsigned data_bits, unsigned code_bits) {
  detail::Comparators cmp;
  if (is_two_operand(op)) {
    cmp.o_or = a | b;
    cmp.o_and = a & b;
  } else {
    cmp.single = a;
  }
  return select_output(op, cmp, data_bits, code_bits);
}

/// Which memory the array models; selects the code and the energy records.
enum class MemoryKind { SttMram, SttCim };

enum class ReduceKind : std::uint8_t { Summation = 0, ZeroCompare = 1 };

inline const char* to_string(ReduceKind r) { return r == ReduceKind::Summation ? "SUM" : "ZCMP"; }

struct VcimResult {
  std::uint64_t value = 0;  ///< reduced scalar, or the zero-compare mask
  std::vector<WordResult> lanes;
  unsigned accesses_used = 1;
};

/// Columns addressed by one sensing event; `column` is the bit index inside
/// the word slot's codeword.
struct ColumnSite {
  unsigned bank = 0;
  unsigned row_a = 0;
  unsigned row_b = 0;
  unsigned group = 0;
  unsigned column = 0;
};

struct TwoCellCurrents {
  double i_sl = 0, i_ref_or = 0, i_ref_and = 0;
};

struct OneCellCurrents {
  double i_cell = 0, i_ref_read = 0;
};

/// Nominal electrical sensing; reproduces the functional path exactly.
class NominalSensor {
 public:
  explicit NominalSensor(const device::DeviceParams& p = {})
      : levels_(device::current_levels(p)), stack_(device::nominal_stack(p)) {}

  TwoCellCurrents two_cell(const ColumnSite&, bool a, bool b) {
    return {(a ? levels_.i_p : levels_.i_ap) + (b ? levels_.i_p : levels_.i_ap), stack_.current(device::kOrRef),
            stack_.current(device::kAndRef)};
  }
  OneCellCurrents one_cell(const ColumnSite&, bool a) {
    return {a ? levels_.i_p : levels_.i_ap, stack_.current(device::kReadRef)};
  }
  const device::CurrentLevels& levels() const { return levels_; }

 private:
  device::CurrentLevels levels_;
  device::ReferenceStack stack_;
};

/// Static process variation: every physical cell and every per-column
/// reference stack gets its own deterministic draw keyed by its position.
class VariationSensor {
 public:
  VariationSensor(const device::DeviceParams& p, const device::VariationSpec& v, std::uint64_t seed,
                  const ArrayConfig& cfg, unsigned code_bits)
      : params_(p), var_(v), seed_(seed), cfg_(cfg), code_bits_(code_bits) {
    p.validate();
    v.validate();
  }

  TwoCellCurrents two_cell(const ColumnSite& s, bool a, bool b) {
    const double v = params_.read_voltage;
    const auto ca = device::sample_cell(params_, var_, seed_, cell_index(s.bank, s.row_a, s.group, s.column));
    const auto cb = device::sample_cell(params_, var_, seed_, cell_index(s.bank, s.row_b, s.group, s.column));
    const auto left = device::sample_stack(params_, var_, seed_, stack_index(s, 0));
    const auto right = device::sample_stack(params_, var_, seed_, stack_index(s, 1));
    return {ca.current(a, v) + cb.current(b, v), left.current(device::kOrRef), right.current(device::kAndRef)};
  }

  OneCellCurrents one_cell(const ColumnSite& s, bool a) {
    const auto ca = device::sample_cell(params_, var_, seed_, cell_index(s.bank, s.row_a, s.group, s.column));
    const auto left = device::sample_stack(params_, var_, seed_, stack_index(s, 0));
    return {ca.current(a, params_.read_voltage), left.current(device::kReadRef)};
  }

 private:
  std::uint64_t physical_column(unsigned group, unsigned column) const {
    return std::uint64_t{group} * code_bits_ + column;
  }
  std::uint64_t cell_index(unsigned bank, unsigned row, unsigned group, unsigned column) const {
    const std::uint64_t cols = std::uint64_t{cfg_.words_per_row} * code_bits_;
    return (std::uint64_t{bank} * cfg_.rows_per_bank + row) * cols + physical_column(group, column);
  }
  std::uint64_t stack_index(const ColumnSite& s, unsigned side) const {
    const std::uint64_t cols = std::uint64_t{cfg_.words_per_row} * code_bits_;
    const std::uint64_t cells = std::uint64_t{cfg_.banks} * cfg_.rows_per_bank * cols;
    return cells + ((std::uint64_t{s.bank} * cols + physical_column(s.group, s.column)) * 2 + side) * 3;
  }

  device::DeviceParams params_;
  device::VariationSpec var_;
  std::uint64_t seed_;
  ArrayConfig cfg_;
  unsigned code_bits_;
};

/// How FaultInjectingSensor draws failures.
enum class FaultMode {
  PerColumn,  ///< every sensed column fails independently with the probability
  PerAccess,  ///< with the probability, exactly one uniformly chosen column fails
};

/// Nominal sensing with transient decision failures. `force_next` fails a
/// chosen set of columns on the next access. A failed column is sensed one
/// current level away from the truth (P-P reads as AP-P, AP-AP as AP-P, and
/// AP-P as P-P), which always flips the column's XOR output.
class FaultInjectingSensor {
 public:
  explicit FaultInjectingSensor(double probability = 0.0, std::uint64_t seed = 1, FaultMode mode = FaultMode::PerColumn,
                                unsigned columns = 51, const device::DeviceParams& p = {})
      : nominal_(p), probability_(probability), mode_(mode), columns_(columns), gen_(seed) {
    if (probability < 0 || probability > 1) throw ConfigError("failure probability must be in [0, 1]");
    if (columns == 0) throw ConfigError("fault injection needs at least one column");
  }

  void force_next(std::set<unsigned> columns) { forced_ = std::move(columns); }

  /// Called once per CiM access so `force_next` and PerAccess draws apply to
  /// exactly one access.
  void begin_access() {
    active_ = std::move(forced_);
    forced_.clear();
    if (mode_ == FaultMode::PerAccess && probability_ > 0 && uniform() < probability_) {
      active_.insert(std::uniform_int_distribution<unsigned>(0, columns_ - 1)(gen_));
    }
  }

  TwoCellCurrents two_cell(const ColumnSite& s, bool a, bool b) {
    TwoCellCurrents c = nominal_.two_cell(s, a, b);
    if (!fails(s.column)) return c;
    const device::CurrentLevels& lv = nominal_.levels();
    switch (static_cast<int>(a) + static_cast<int>(b)) {
      case 2: c.i_sl = 0.5 * (lv.i_ref_and + lv.i_ap_p); break;
      case 0: c.i_sl = 0.5 * (lv.i_ref_or + lv.i_ap_p); break;
      default: c.i_sl = 0.5 * (lv.i_ref_and + lv.i_pp); break;
    }
    ++injected_;
    return c;
  }

  OneCellCurrents one_cell(const ColumnSite& s, bool a) {
    OneCellCurrents c = nominal_.one_cell(s, a);
    if (fails(s.column)) {
      const device::CurrentLevels& lv = nominal_.levels();
      c.i_cell = a ? 0.5 * (lv.i_ap + lv.i_ref_read) : 0.5 * (lv.i_p + lv.i_ref_read);
      ++injected_;
    }
    return c;
  }

  std::uint64_t injected() const { return injected_; }
  double probability() const { return probability_; }

 private:
  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(gen_); }

  bool fails(unsigned column) {
    if (active_.count(column)) return true;
    return mode_ == FaultMode::PerColumn && probability_ > 0 && uniform() < probability_;
  }

  NominalSensor nominal_;
  double probability_;
  FaultMode mode_;
  unsigned columns_;
  std::mt19937_64 gen_;
  std::set<unsigned> forced_;
  std::set<unsigned> active_;
  std::uint64_t injected_ = 0;
};

template <class S>
concept Sensor = requires(S s, const ColumnSite& site, bool bit) {
  { s.two_cell(site, bit, bit) } -> std::same_as<TwoCellCurrents>;
  { s.one_cell(site, bit) } -> std::same_as<OneCellCurrents>;
};

template <class S>
void begin_access(S& sensor) {
  if constexpr (requires { sensor.begin_access(); }) sensor.begin_access();
}

/// Mutable state of one scratchpad: storage, code, and energy ledger.
class CimArray {
 public:
  CimArray(ArrayConfig cfg, MemoryKind kind, energy::EnergyConfig energy = {})
      : layout_(cfg),
        kind_(kind),
        code_(ecc::CodeSpec::make(kind == MemoryKind::SttCim ? ecc::CodeKind::Ec3ed4 : ecc::CodeKind::Secded,
                                  cfg.word_width)),
        ledger_(std::move(energy)),
        cells_(std::size_t{cfg.banks} * cfg.rows_per_bank * cfg.words_per_row, code_.encode(0)) {}

  /// Explicit code, for experiments that pair a geometry with either code.
  CimArray(ArrayConfig cfg, MemoryKind kind, ecc::CodeSpec code, energy::EnergyConfig energy = {})
      : layout_(cfg),
        kind_(kind),
        code_(std::move(code)),
        ledger_(std::move(energy)),
        cells_(std::size_t{cfg.banks} * cfg.rows_per_bank * cfg.words_per_row, code_.encode(0)) {
    if (code_.data_bits() != cfg.word_width) throw ConfigError("code data_bits must equal word_width");
  }

  const ArrayConfig& config() const { return layout_.config(); }
  const AddressLayout& layout() const { return layout_; }
  const ecc::CodeSpec& code() const { return code_; }
  MemoryKind kind() const { return kind_; }
  energy::EnergyLedger& ledger() { return ledger_; }
  const energy::EnergyLedger& ledger() const { return ledger_; }

  /// Replication writes counted as one special write instead of one write
  /// per word slot.
  void set_replicate_as_special_write(bool on) { replicate_special_ = on; }
  bool replicate_as_special_write() const { return replicate_special_; }

  void write_word(Address addr, Word data) {
    if (layout_.is_spare(addr)) throw AddressError("spare row is written only by broadcast");
    slot(layout_.locate(addr)) = code_.encode(check_width(data));
    ledger_.charge(write_kind());
  }

  /// ECC-corrected read, one array access.
  ecc::DecodeOutcome read_word(Address addr) {
    ledger_.charge(read_kind());
    return peek(addr);
  }

  /// Decode without accounting (used by near-memory correction and dumps).
  ecc::DecodeOutcome peek(Address addr) const { return code_.decode(slot(layout_.locate(addr))); }

  Codeword raw(Address addr) const { return slot(layout_.locate(addr)); }
  void set_raw(Address addr, Codeword c) { slot(layout_.locate(addr)) = c & code_.codeword_mask(); }
  void inject_flip(Address addr, unsigned bit) {
    if (bit >= code_.code_bits()) throw Error("bit index outside the codeword");
    slot(layout_.locate(addr)) ^= Codeword{1} << bit;
  }

  /// Throws AlignmentError unless a, b share bank and column group on
  /// different rows.
  void check_alignment(Address a, Address b) const {
    const Location la = layout_.locate(a), lb = layout_.locate(b);
    if (la.bank != lb.bank) throw AlignmentError("CiM operands in different banks");
    if (la.row == lb.row) throw AlignmentError("CiM operands in the same row");
    if (la.group != lb.group) throw AlignmentError("CiM operands in different column groups");
  }

  /// Error-free CiM access. NOT and READ take only `a`.
  WordResult cim_word(Address a, Address b, CimOp op) {
    require_cim();
    if (is_two_operand(op)) check_alignment(a, b);
    const WordResult r = compute(op, raw(a), is_two_operand(op) ? raw(b) : 0, code_.data_bits(), code_.code_bits());
    ledger_.charge(energy::OpKind::CimOp);
    return r;
  }

  WordResult cim_not(Address a) { return cim_word(a, a, CimOp::Not); }

  /// CiM access sensed column by column through `sensor`; may contain
  /// decision errors.
  template <Sensor S>
  WordResult cim_word_noisy(Address a, Address b, CimOp op, S& sensor) {
    require_cim();
    begin_access(sensor);
    const Location la = layout_.locate(a);
    detail::Comparators cmp;
    if (is_two_operand(op)) {
      check_alignment(a, b);
      sense_two(la, layout_.locate(b).row, raw(a), raw(b), sensor, cmp);
    } else {
      sense_one(la, raw(a), sensor, cmp);
    }
    ledger_.charge(energy::OpKind::CimOp);
    return select_output(op, cmp, code_.data_bits(), code_.code_bits());
  }

  /// Lane-wise CiM over `lanes` adjacent word slots starting at a and b,
  /// followed by the reduce unit, in one access.
  VcimResult vcim(Address a, Address b, CimOp op, ReduceKind reduce, unsigned lanes) {
    NominalSensor unused;
    return vcim_impl<NominalSensor, false>(a, b, op, reduce, lanes, unused);
  }

  template <Sensor S>
  VcimResult vcim_noisy(Address a, Address b, CimOp op, ReduceKind reduce, unsigned lanes, S& sensor) {
    return vcim_impl<S, true>(a, b, op, reduce, lanes, sensor);
  }

  /// Lane value fed to the reduce unit (ADD keeps its carry).
  std::uint64_t lane_value(const WordResult& r, CimOp op) const {
    std::uint64_t v = r.value;
    if (op == CimOp::Add && r.carry_out) v |= std::uint64_t{1} << code_.data_bits();
    return v;
  }

  std::uint64_t reduce(const std::vector<WordResult>& lanes, CimOp op, ReduceKind kind) const {
    std::uint64_t out = 0;
    for (std::size_t k = 0; k < lanes.size(); ++k) {
      const std::uint64_t v = lane_value(lanes[k], op);
      if (kind == ReduceKind::Summation) out += v;
      else out |= static_cast<std::uint64_t>(v != 0) << k;
    }
    return out;
  }

  /// Fills every word slot of the spare rows of the listed banks.
  void broadcast_spare_write(const std::vector<unsigned>& banks, Word value) {
    const Codeword c = code_.encode(check_width(value));
    for (unsigned bank : banks) {
      if (bank >= config().banks) throw AddressError("bank out of range");
      for (unsigned g = 0; g < config().words_per_row; ++g) slot({bank, config().spare_row(), g}) = c;
      ledger_.charge(energy::OpKind::SpecialWrite);
    }
  }

  void broadcast_spare_write_all(Word value) {
    std::vector<unsigned> banks(config().banks);
    for (unsigned b = 0; b < config().banks; ++b) banks[b] = b;
    broadcast_spare_write(banks, value);
  }

  /// Copies `value` into every word slot of a user row.
  void column_replicate_write(unsigned bank, unsigned row, Word value) {
    if (bank >= config().banks || row >= config().user_rows()) throw AddressError("replication row out of range");
    const Codeword c = code_.encode(check_width(value));
    for (unsigned g = 0; g < config().words_per_row; ++g) slot({bank, row, g}) = c;
    if (replicate_special_) ledger_.charge(energy::OpKind::SpecialWrite);
    else ledger_.charge(write_kind(), config().words_per_row);
  }

  /// One line per row: `B<bank> R<row>: <codeword hex per slot>`.
  void dump(std::ostream& out) const {
    const unsigned digits = (code_.code_bits() + 3) / 4;
    char buf[32];
    for (unsigned bank = 0; bank < config().banks; ++bank) {
      for (unsigned row = 0; row < config().rows_per_bank; ++row) {
        std::snprintf(buf, sizeof buf, "B%u R%04u:", bank, row);
        out << buf;
        for (unsigned g = 0; g < config().words_per_row; ++g) {
          std::snprintf(buf, sizeof buf, " %0*llx", static_cast<int>(digits),
                        static_cast<unsigned long long>(slot({bank, row, g})));
          out << buf;
        }
        out << '\n';
      }
    }
  }

  energy::OpKind read_kind() const {
    return kind_ == MemoryKind::SttCim ? energy::OpKind::CimRead : energy::OpKind::BaselineRead;
  }
  energy::OpKind write_kind() const {
    return kind_ == MemoryKind::SttCim ? energy::OpKind::CimWrite : energy::OpKind::BaselineWrite;
  }

 private:
  Word check_width(Word data) const {
    if (config().word_width < 32 && (data >> config().word_width) != 0) {
      throw Error("data wider than the configured word width");
    }
    return data;
  }

  void require_cim() const {
    if (kind_ != MemoryKind::SttCim) throw Error("CiM operations need an STT-CiM array");
  }

  std::size_t index(const Location& l) const {
    return (std::size_t{l.bank} * config().rows_per_bank + l.row) * config().words_per_row + l.group;
  }
  Codeword& slot(const Location& l) { return cells_[index(l)]; }
  const Codeword& slot(const Location& l) const { return cells_[index(l)]; }

  template <Sensor S>
  void sense_two(const Location& la, unsigned row_b, Codeword ca, Codeword cb, S& sensor,
                 detail::Comparators& cmp) const {
    for (unsigned c = 0; c < code_.code_bits(); ++c) {
      const ColumnSite site{la.bank, la.row, row_b, la.group, c};
      const TwoCellCurrents i = sensor.two_cell(site, (ca >> c) & 1u, (cb >> c) & 1u);
      cmp.o_or |= static_cast<Codeword>(device::sense_bit(i.i_sl, i.i_ref_or)) << c;
      cmp.o_and |= static_cast<Codeword>(device::sense_bit(i.i_sl, i.i_ref_and)) << c;
    }
  }

  template <Sensor S>
  void sense_one(const Location& la, Codeword ca, S& sensor, detail::Comparators& cmp) const {
    for (unsigned c = 0; c < code_.code_bits(); ++c) {
      const ColumnSite site{la.bank, la.row, la.row, la.group, c};
      const OneCellCurrents i = sensor.one_cell(site, (ca >> c) & 1u);
      cmp.single |= static_cast<Codeword>(device::sense_bit(i.i_cell, i.i_ref_read)) << c;
    }
  }

  template <class S, bool Noisy>
  VcimResult vcim_impl(Address a, Address b, CimOp op, ReduceKind reduce_kind, unsigned lanes, S& sensor) {
    require_cim();
    if ((lanes != 1 && lanes != 4 && lanes != 8) || lanes > config().vector_length) {
      throw Error("lane count must be 1, 4 or 8 and at most the configured vector length");
    }
    if (!is_two_operand(op)) throw Error("vector CiM needs a two-operand op");
    const Location la = layout_.locate(a), lb = layout_.locate(b);
    if (la.group % lanes != 0 || la.group + lanes > config().words_per_row) {
      throw AlignmentError("vector operands must start on a lane boundary within one row");
    }
    check_alignment(a, b);
    if constexpr (Noisy) begin_access(sensor);
    VcimResult out;
    for (unsigned k = 0; k < lanes; ++k) {
      const Location sa{la.bank, la.row, la.group + k}, sb{lb.bank, lb.row, lb.group + k};
      if constexpr (Noisy) {
        detail::Comparators cmp;
        sense_two(sa, sb.row, slot(sa), slot(sb), sensor, cmp);
        out.lanes.push_back(select_output(op, cmp, code_.data_bits(), code_.code_bits()));
      } else {
        out.lanes.push_back(compute(op, slot(sa), slot(sb), code_.data_bits(), code_.code_bits()));
      }
    }
    out.value = reduce(out.lanes, op, reduce_kind);
    ledger_.charge(energy::vcim_kind(lanes));
    return out;
  }

  AddressLayout layout_;
  MemoryKind kind_;
  ecc::CodeSpec code_;
  energy::EnergyLedger ledger_;
  std::vector<Codeword> cells_;
  bool replicate_special_ = false;
};

}  // namespace sttcim::array
