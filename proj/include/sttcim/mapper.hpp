#pragma once

// Data placement for the three compute patterns: element-wise pairs (Type I),
// one element against a whole vector through the spare row (Type II), and a
// few elements against a long vector through column replication (Type III).

#include <algorithm>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "sttcim/common.hpp"
#include "sttcim/layout.hpp"

namespace sttcim::mapper {

/// True iff both addresses are valid, share a bank and column group, and
/// sit on different rows.
inline bool alignment_ok(Address a, Address b, const AddressLayout& layout) {
  if (!layout.valid(a) || !layout.valid(b)) return false;
  const Location la = layout.locate(a), lb = layout.locate(b);
  return la.bank == lb.bank && la.row != lb.row && la.group == lb.group;
}

enum class Pattern { Type1Aligned, Type1RowInterleaved, Type2SpareRow, Type3ColumnReplication };

inline const char* to_string(Pattern p) {
  switch (p) {
    case Pattern::Type1Aligned: return "TYPE1_ALIGNED";
    case Pattern::Type1RowInterleaved: return "TYPE1_ROW_INTERLEAVED";
    case Pattern::Type2SpareRow: return "TYPE2_SPARE_ROW";
    case Pattern::Type3ColumnReplication: return "TYPE3_COLUMN_REPLICATION";
  }
  return "?";
}

inline Pattern parse_pattern(const std::string& s) {
  for (Pattern p : {Pattern::Type1Aligned, Pattern::Type1RowInterleaved, Pattern::Type2SpareRow,
                    Pattern::Type3ColumnReplication}) {
    if (s == to_string(p)) return p;
  }
  throw ConfigError("unknown mapping pattern '" + s + "'");
}

/// A run of elements [first, first+count) laid out in one bank, `wpr`
/// elements per row, starting at `base_row` and advancing `row_stride` rows.
struct Segment {
  unsigned bank = 0;
  std::uint32_t first = 0;
  std::uint32_t count = 0;
  unsigned base_row = 0;
  unsigned row_stride = 1;
  bool operator==(const Segment&) const = default;
};

struct Placement {
  std::string name;
  std::uint32_t length = 0;
  std::vector<Segment> segments;
  bool operator==(const Placement&) const = default;
};

struct SpareFill {
  std::uint32_t k = 0;  ///< outer-loop iteration (element index of the broadcast operand)
  std::vector<unsigned> banks;
  bool operator==(const SpareFill&) const = default;
};

struct Replication {
  std::uint32_t m = 0;  ///< element index of the replicated operand
  unsigned bank = 0;
  unsigned row = 0;
  bool operator==(const Replication&) const = default;
};

struct MappingPlan {
  Pattern pattern = Pattern::Type1Aligned;
  ArrayConfig config{};
  std::vector<Placement> arrays;
  std::vector<SpareFill> spare_fills;
  std::vector<Replication> replications;
  std::uint64_t overhead_writes = 0;  ///< spare-row broadcasts (per bank) plus replications
  std::string lhs, rhs;               ///< the operand pair this plan aligns

  AddressLayout layout() const { return AddressLayout(config); }

  const Placement* find(const std::string& name) const {
    for (const auto& p : arrays) {
      if (p.name == name) return &p;
    }
    return nullptr;
  }
  const Placement& get(const std::string& name) const {
    if (const Placement* p = find(name)) return *p;
    throw ConfigError("plan has no array '" + name + "'");
  }

  Address address_of(const std::string& name, std::uint32_t index) const {
    const Placement& p = get(name);
    for (const auto& s : p.segments) {
      if (index >= s.first && index < s.first + s.count) {
        const std::uint32_t off = index - s.first, wpr = config.words_per_row;
        return layout().address_of({s.bank, s.base_row + (off / wpr) * s.row_stride, off % wpr});
      }
    }
    throw AddressError(name + "[" + std::to_string(index) + "] is not placed");
  }

  /// True when the array occupies one contiguous address range.
  bool is_linear(const std::string& name) const {
    const Placement& p = get(name);
    if (p.length == 0) return true;
    const Address base = address_of(name, 0);
    for (const auto& s : p.segments) {
      if (s.row_stride != 1 && s.count > config.words_per_row) return false;
      if (address_of(name, s.first) != base + s.first) return false;
      if (address_of(name, s.first + s.count - 1) != base + s.first + s.count - 1) return false;
    }
    return true;
  }

  std::vector<unsigned> banks_of(const std::string& name) const {
    std::vector<unsigned> out;
    for (const auto& s : get(name).segments) {
      if (std::find(out.begin(), out.end(), s.bank) == out.end()) out.push_back(s.bank);
    }
    std::sort(out.begin(), out.end());
    return out;
  }

  /// Row holding replica `m` in `bank` (Type III).
  std::optional<unsigned> replica_row(std::uint32_t m, unsigned bank) const {
    for (const auto& r : replications) {
      if (r.m == m && r.bank == bank) return r.row;
    }
    return std::nullopt;
  }

  /// Special writes the ledger records for this plan's overhead, with
  /// replication counted either per word slot or as one special write.
  std::uint64_t predicted_special_writes(bool replicate_as_special) const {
    std::uint64_t n = 0;
    for (const auto& f : spare_fills) n += f.banks.size();
    if (replicate_as_special) n += replications.size();
    return n;
  }
  std::uint64_t predicted_plain_writes(bool replicate_as_special) const {
    return replicate_as_special ? 0 : std::uint64_t{replications.size()} * config.words_per_row;
  }

  bool operator==(const MappingPlan&) const = default;
};

class CapacityError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

/// Row-granular allocator over the user rows, in linear (bank-major) order.
class RowAllocator {
 public:
  explicit RowAllocator(const ArrayConfig& cfg)
      : cfg_(cfg), used_(std::size_t{cfg.banks} * cfg.user_rows(), false) {}

  void reserve(unsigned bank, unsigned row) {
    std::vector<bool>::reference u = used_.at(std::size_t{bank} * cfg_.user_rows() + row);
    if (u) throw Error("row reserved twice");
    u = true;
  }
  bool used(unsigned bank, unsigned row) const { return used_[std::size_t{bank} * cfg_.user_rows() + row]; }

  /// First run of `rows` free rows in linear order; returns the linear row.
  std::optional<std::size_t> find_linear_run(std::size_t rows) const {
    std::size_t run = 0;
    for (std::size_t r = 0; r < used_.size(); ++r) {
      run = used_[r] ? 0 : run + 1;
      if (run == rows) return r + 1 - rows;
    }
    return rows == 0 ? std::optional<std::size_t>(0) : std::nullopt;
  }

  /// Places `length` elements contiguously in address space.
  Placement place_linear(const std::string& name, std::uint32_t length) {
    Placement p{name, length, {}};
    if (length == 0) return p;
    const unsigned wpr = cfg_.words_per_row, ur = cfg_.user_rows();
    const std::size_t rows = (length + wpr - 1) / wpr;
    const auto start = find_linear_run(rows);
    if (!start) throw CapacityError("no room for array '" + name + "'");
    std::uint32_t placed = 0;
    for (std::size_t lr = *start; lr < *start + rows; ++lr) {
      const unsigned bank = static_cast<unsigned>(lr / ur), row = static_cast<unsigned>(lr % ur);
      reserve(bank, row);
      const std::uint32_t n = std::min<std::uint32_t>(wpr, length - placed);
      if (p.segments.empty() || p.segments.back().bank != bank) p.segments.push_back({bank, placed, 0, row, 1});
      p.segments.back().count += n;
      placed += n;
    }
    return p;
  }

 private:
  ArrayConfig cfg_;
  std::vector<bool> used_;
};

namespace detail {

inline std::uint32_t rows_for(std::uint64_t n, unsigned wpr) { return static_cast<std::uint32_t>((n + wpr - 1) / wpr); }

inline void place_extras(MappingPlan& plan, RowAllocator& alloc,
                         const std::vector<std::pair<std::string, std::uint32_t>>& extras) {
  for (const auto& [name, len] : extras) {
    if (plan.find(name)) throw ConfigError("array '" + name + "' placed twice");
    plan.arrays.push_back(alloc.place_linear(name, len));
  }
}

}  // namespace detail

/// Element-wise pairs A[i], B[i]. Both arrays share bank 0 when they fit;
/// otherwise they are row-interleaved (A on even rows, B on odd rows) across
/// as many banks as needed. `extras` are unaligned arrays (outputs, tables).
inline MappingPlan plan_type1(std::uint32_t n, const ArrayConfig& cfg,
                              const std::vector<std::pair<std::string, std::uint32_t>>& extras = {},
                              const std::string& a = "A", const std::string& b = "B") {
  cfg.validate();
  MappingPlan plan;
  plan.config = cfg;
  plan.lhs = a;
  plan.rhs = b;
  RowAllocator alloc(cfg);
  const unsigned wpr = cfg.words_per_row, ur = cfg.user_rows();
  const std::uint32_t rows = detail::rows_for(n, wpr);
  Placement pa{a, n, {}}, pb{b, n, {}};
  if (2ull * rows <= ur) {
    plan.pattern = Pattern::Type1Aligned;
    if (n > 0) {
      pa.segments.push_back({0, 0, n, 0, 1});
      pb.segments.push_back({0, 0, n, rows, 1});
      for (unsigned r = 0; r < 2 * rows; ++r) alloc.reserve(0, r);
    }
  } else {
    plan.pattern = Pattern::Type1RowInterleaved;
    const std::uint32_t pairs_per_bank = ur / 2;
    const std::uint64_t banks_needed = (rows + pairs_per_bank - 1) / pairs_per_bank;
    if (banks_needed > cfg.banks) throw CapacityError("Type I operands exceed the array");
    for (unsigned bank = 0; bank < banks_needed; ++bank) {
      const std::uint32_t first = bank * pairs_per_bank * wpr;
      const std::uint32_t count = std::min<std::uint32_t>(pairs_per_bank * wpr, n - first);
      pa.segments.push_back({bank, first, count, 0, 2});
      pb.segments.push_back({bank, first, count, 1, 2});
      for (unsigned r = 0; r < 2 * detail::rows_for(count, wpr); ++r) alloc.reserve(bank, r);
    }
  }
  plan.arrays.push_back(std::move(pa));
  plan.arrays.push_back(std::move(pb));
  detail::place_extras(plan, alloc, extras);
  return plan;
}

/// A[k] against every B[i]: B contiguous, and each outer iteration k fills
/// the spare rows of the banks B occupies with A[k].
inline MappingPlan plan_type2(std::uint32_t m, std::uint32_t n, const ArrayConfig& cfg,
                              const std::vector<std::pair<std::string, std::uint32_t>>& extras = {},
                              const std::string& a = "A", const std::string& b = "B") {
  cfg.validate();
  MappingPlan plan;
  plan.pattern = Pattern::Type2SpareRow;
  plan.config = cfg;
  plan.lhs = a;
  plan.rhs = b;
  RowAllocator alloc(cfg);
  plan.arrays.push_back(alloc.place_linear(b, n));
  plan.arrays.push_back(alloc.place_linear(a, m));
  const std::vector<unsigned> banks = plan.banks_of(b);
  if (!banks.empty()) {
    for (std::uint32_t k = 0; k < m; ++k) plan.spare_fills.push_back({k, banks});
  }
  plan.overhead_writes = std::uint64_t{m} * banks.size();
  detail::place_extras(plan, alloc, extras);
  return plan;
}

/// A[m] (few elements) against every B[i]: each A[m] is copied across a
/// full row in every bank B occupies.
inline MappingPlan plan_type3(std::uint32_t m, std::uint32_t n, const ArrayConfig& cfg,
                              const std::vector<std::pair<std::string, std::uint32_t>>& extras = {},
                              const std::string& a = "A", const std::string& b = "B") {
  cfg.validate();
  MappingPlan plan;
  plan.pattern = Pattern::Type3ColumnReplication;
  plan.config = cfg;
  plan.lhs = a;
  plan.rhs = b;
  RowAllocator alloc(cfg);
  const unsigned wpr = cfg.words_per_row, ur = cfg.user_rows();
  if (m >= ur) throw CapacityError("too many replicated elements");
  Placement pb{b, n, {}};
  if (m > 0 || n > 0) {
    // Fill banks with B, leaving m rows per bank for the replicas.
    const std::uint32_t per_bank = (ur - m) * wpr;
    std::uint32_t placed = 0;
    for (unsigned bank = 0; placed < n; ++bank) {
      if (bank >= cfg.banks) throw CapacityError("Type III operand exceeds the array");
      const std::uint32_t count = std::min(per_bank, n - placed);
      pb.segments.push_back({bank, placed, count, 0, 1});
      const std::uint32_t rows = detail::rows_for(count, wpr);
      for (unsigned r = 0; r < rows; ++r) alloc.reserve(bank, r);
      for (std::uint32_t k = 0; k < m; ++k) {
        alloc.reserve(bank, rows + k);
        plan.replications.push_back({k, bank, rows + k});
      }
      placed += count;
    }
  }
  plan.arrays.push_back(std::move(pb));
  plan.arrays.push_back(alloc.place_linear(a, m));
  plan.overhead_writes = plan.replications.size();
  detail::place_extras(plan, alloc, extras);
  return plan;
}

/// Soundness check: every operand pair the plan declares CiM-convertible
/// must pass `alignment_ok`, placed arrays must not overlap, and spare and
/// replica rows must not hold array data. Returns the problems found.
inline std::vector<std::string> verify_plan(const MappingPlan& plan) {
  std::vector<std::string> problems;
  const AddressLayout layout = plan.layout();
  std::map<Address, std::string> owner;
  for (const auto& p : plan.arrays) {
    std::uint32_t covered = 0;
    for (const auto& s : p.segments) covered += s.count;
    if (covered != p.length) problems.push_back(p.name + ": segments cover " + std::to_string(covered) + " of " +
                                                std::to_string(p.length) + " elements");
    for (std::uint32_t i = 0; i < p.length && covered == p.length; ++i) {
      const Address addr = plan.address_of(p.name, i);
      if (!layout.is_user(addr)) {
        problems.push_back(p.name + "[" + std::to_string(i) + "] outside user rows");
        continue;
      }
      auto [it, fresh] = owner.emplace(addr, p.name);
      if (!fresh) problems.push_back(p.name + " overlaps " + it->second + " at " + std::to_string(addr));
    }
  }
  for (const auto& r : plan.replications) {
    for (unsigned g = 0; g < plan.config.words_per_row; ++g) {
      if (owner.count(layout.address_of({r.bank, r.row, g}))) {
        problems.push_back("replica row " + std::to_string(r.row) + " holds array data");
        break;
      }
    }
  }
  if (!problems.empty()) return problems;

  const Placement* a = plan.find(plan.lhs);
  const Placement* b = plan.find(plan.rhs);
  if (!a || !b) return {"plan lacks its operand arrays"};
  auto check = [&](Address x, Address y, const std::string& what) {
    if (!alignment_ok(x, y, layout)) problems.push_back("misaligned " + what);
  };
  switch (plan.pattern) {
    case Pattern::Type1Aligned:
    case Pattern::Type1RowInterleaved:
      if (a->length != b->length) problems.push_back("Type I operands differ in length");
      for (std::uint32_t i = 0; i < std::min(a->length, b->length); ++i) {
        check(plan.address_of(a->name, i), plan.address_of(b->name, i), "pair " + std::to_string(i));
      }
      break;
    case Pattern::Type2SpareRow: {
      const auto banks = plan.banks_of(b->name);
      for (std::uint32_t k = 0; k < a->length; ++k) {
        const bool filled = std::any_of(plan.spare_fills.begin(), plan.spare_fills.end(),
                                        [&](const SpareFill& f) { return f.k == k && f.banks == banks; });
        if (!filled) problems.push_back("no spare fill for k=" + std::to_string(k));
      }
      for (std::uint32_t i = 0; i < b->length; ++i) {
        const Address addr = plan.address_of(b->name, i);
        check(addr, layout.spare_partner(addr), "spare partner of B[" + std::to_string(i) + "]");
      }
      break;
    }
    case Pattern::Type3ColumnReplication:
      for (std::uint32_t i = 0; i < b->length; ++i) {
        const Address addr = plan.address_of(b->name, i);
        const Location l = layout.locate(addr);
        for (std::uint32_t k = 0; k < a->length; ++k) {
          const auto row = plan.replica_row(k, l.bank);
          if (!row) {
            problems.push_back("no replica of element " + std::to_string(k) + " in bank " + std::to_string(l.bank));
            return problems;
          }
          check(addr, layout.address_of({l.bank, *row, l.group}), "replica " + std::to_string(k));
        }
      }
      break;
  }
  return problems;
}

/// Text form, one directive per line:
///   PATTERN <name>
///   LAYOUT <banks> <rows_per_bank> <words_per_row> <word_width> <vector_length>
///   OPERANDS <lhs> <rhs>
///   ARRAY <name> <length>
///   PLACE <name> <base> <bank> <first> <count> <row_stride>
///   SPARE_FILL <k> <bank>...
///   REPLICATE <m> <bank> <row>
///   OVERHEAD <writes>
inline void write_plan(std::ostream& out, const MappingPlan& plan) {
  const AddressLayout layout = plan.layout();
  const ArrayConfig& c = plan.config;
  out << "PATTERN " << to_string(plan.pattern) << '\n';
  out << "LAYOUT " << c.banks << ' ' << c.rows_per_bank << ' ' << c.words_per_row << ' ' << c.word_width << ' '
      << c.vector_length << '\n';
  out << "OPERANDS " << plan.lhs << ' ' << plan.rhs << '\n';
  for (const auto& p : plan.arrays) {
    out << "ARRAY " << p.name << ' ' << p.length << '\n';
    for (const auto& s : p.segments) {
      out << "PLACE " << p.name << ' ' << layout.address_of({s.bank, s.base_row, 0}) << ' ' << s.bank << ' '
          << s.first << ' ' << s.count << ' ' << s.row_stride << '\n';
    }
  }
  for (const auto& f : plan.spare_fills) {
    out << "SPARE_FILL " << f.k;
    for (unsigned b : f.banks) out << ' ' << b;
    out << '\n';
  }
  for (const auto& r : plan.replications) out << "REPLICATE " << r.m << ' ' << r.bank << ' ' << r.row << '\n';
  out << "OVERHEAD " << plan.overhead_writes << '\n';
}

inline std::string to_text(const MappingPlan& plan) {
  std::ostringstream out;
  write_plan(out, plan);
  return out.str();
}

inline MappingPlan parse_plan(std::istream& in) {
  MappingPlan plan;
  bool have_layout = false;
  std::string line;
  int lineno = 0;
  auto fail = [&](const std::string& msg) -> void {
    throw ConfigError("plan line " + std::to_string(lineno) + ": " + msg);
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
    std::istringstream ls(line);
    std::string dir;
    if (!(ls >> dir)) continue;
    if (dir == "PATTERN") {
      std::string p;
      ls >> p;
      plan.pattern = parse_pattern(p);
    } else if (dir == "LAYOUT") {
      ArrayConfig& c = plan.config;
      if (!(ls >> c.banks >> c.rows_per_bank >> c.words_per_row >> c.word_width >> c.vector_length)) fail("bad LAYOUT");
      c.validate();
      have_layout = true;
    } else if (dir == "OPERANDS") {
      if (!(ls >> plan.lhs >> plan.rhs)) fail("bad OPERANDS");
    } else if (dir == "ARRAY") {
      Placement p;
      if (!(ls >> p.name >> p.length)) fail("bad ARRAY");
      if (plan.find(p.name)) fail("duplicate array " + p.name);
      plan.arrays.push_back(std::move(p));
    } else if (dir == "PLACE") {
      if (!have_layout) fail("PLACE before LAYOUT");
      std::string name;
      Address base = 0;
      Segment s;
      if (!(ls >> name >> base >> s.bank >> s.first >> s.count >> s.row_stride)) fail("bad PLACE");
      auto it = std::find_if(plan.arrays.begin(), plan.arrays.end(), [&](const Placement& p) { return p.name == name; });
      if (it == plan.arrays.end()) fail("PLACE for undeclared array " + name);
      const Location l = plan.layout().locate(base);
      if (l.bank != s.bank || l.group != 0) fail("PLACE base must start a row in the named bank");
      if (s.row_stride == 0) fail("row stride must be positive");
      s.base_row = l.row;
      it->segments.push_back(s);
    } else if (dir == "SPARE_FILL") {
      SpareFill f;
      if (!(ls >> f.k)) fail("bad SPARE_FILL");
      unsigned b;
      while (ls >> b) f.banks.push_back(b);
      plan.spare_fills.push_back(std::move(f));
    } else if (dir == "REPLICATE") {
      Replication r;
      if (!(ls >> r.m >> r.bank >> r.row)) fail("bad REPLICATE");
      plan.replications.push_back(r);
    } else if (dir == "OVERHEAD") {
      if (!(ls >> plan.overhead_writes)) fail("bad OVERHEAD");
    } else {
      fail("unknown directive " + dir);
    }
    std::string extra;
    if (ls >> extra) fail("trailing text '" + extra + "'");
  }
  if (!have_layout) throw ConfigError("plan has no LAYOUT");
  return plan;
}

inline MappingPlan parse_plan(const std::string& text) {
  std::istringstream in(text);
  return parse_plan(in);
}

}  // namespace sttcim::mapper
