#pragma once

// Per-operation energy and latency accounting in units of one baseline
// STT-MRAM read. Ledgers keep only counters; energies are derived from them,
// so charging is exactly linear and merging is exactly associative.

#include <array>
#include <cstdint>
#include <cstdio>
#include <ostream>
#include <string>

#include "sttcim/common.hpp"
#include "sttcim/config.hpp"

namespace sttcim::energy {

enum class Component : unsigned { Periph, Wordline, Bitline, Ref, Sense, Ecc };
inline constexpr std::size_t kComponents = 6;
inline constexpr std::array<const char*, kComponents> kComponentNames{"periph", "wordline", "bitline",
                                                                        "ref",    "sense",    "ecc"};

enum class OpKind : unsigned {
  BaselineRead,
  BaselineWrite,
  CimRead,
  CimWrite,
  CimOp,
  Vcim4,
  Vcim8,
  SpecialWrite,
  NmCorrection,  ///< one near-memory fallback: two corrected reads
};
inline constexpr std::size_t kOpKinds = 9;
inline constexpr std::array<const char*, kOpKinds> kOpKindNames{
    "baseline_read", "baseline_write", "cim_read", "cim_write", "cim_op",
    "vcim4",         "vcim8",          "special_write", "nm_correction"};

inline const char* to_string(OpKind k) { return kOpKindNames[static_cast<unsigned>(k)]; }

inline OpKind vcim_kind(unsigned lanes) {
  switch (lanes) {
    case 1: return OpKind::CimOp;
    case 4: return OpKind::Vcim4;
    case 8: return OpKind::Vcim8;
    default: throw Error("vector length must be 1, 4 or 8");
  }
}

struct OpEnergy {
  std::array<double, kComponents> parts{};

  double total() const {
    double t = 0;
    for (double p : parts) t += p;
    return t;
  }
  double& operator[](Component c) { return parts[static_cast<unsigned>(c)]; }
  double operator[](Component c) const { return parts[static_cast<unsigned>(c)]; }

  OpEnergy scaled(double f) const {
    OpEnergy o = *this;
    for (double& p : o.parts) p *= f;
    return o;
  }
  OpEnergy& operator+=(const OpEnergy& o) {
    for (std::size_t i = 0; i < kComponents; ++i) parts[i] += o.parts[i];
    return *this;
  }
  bool operator==(const OpEnergy&) const = default;
};

/// Component order: periph, wordline, bitline, ref, sense, ecc.
struct EnergyConfig {
  // Totals: 1.0, 3.0, 1.044, 3.0, 1.316 (= 2 x (1 - 0.342)), 3.0.
  OpEnergy baseline_read{{0.10, 0.08, 0.52, 0.08, 0.14, 0.08}};
  OpEnergy baseline_write{{0.30, 0.08, 2.50, 0.00, 0.00, 0.12}};
  OpEnergy cim_read{{0.114, 0.08, 0.52, 0.08, 0.14, 0.11}};
  OpEnergy cim_write{{0.30, 0.08, 2.50, 0.00, 0.00, 0.12}};
  OpEnergy cim_op{{0.144, 0.16, 0.58, 0.12, 0.20, 0.112}};
  OpEnergy special_write{{0.30, 0.08, 2.50, 0.00, 0.00, 0.12}};
  /// Added per lane beyond the first for vector CiM.
  OpEnergy vcim_lane_increment{{0.02, 0.00, 0.10, 0.00, 0.03, 0.00}};
  int memory_latency = 1;

  OpEnergy energy(OpKind k) const {
    switch (k) {
      case OpKind::BaselineRead: return baseline_read;
      case OpKind::BaselineWrite: return baseline_write;
      case OpKind::CimRead: return cim_read;
      case OpKind::CimWrite: return cim_write;
      case OpKind::CimOp: return cim_op;
      case OpKind::Vcim4: return vcim_energy(4);
      case OpKind::Vcim8: return vcim_energy(8);
      case OpKind::SpecialWrite: return special_write;
      case OpKind::NmCorrection: return cim_read.scaled(2.0);
    }
    throw Error("unknown op kind");
  }

  OpEnergy vcim_energy(unsigned lanes) const {
    OpEnergy e = cim_op;
    e += vcim_lane_increment.scaled(static_cast<double>(lanes - 1));
    return e;
  }

  /// Array accesses one operation of this kind occupies.
  static unsigned accesses(OpKind k) { return k == OpKind::NmCorrection ? 2 : 1; }

  void validate() const {
    for (const OpEnergy* e : {&baseline_read, &baseline_write, &cim_read, &cim_write, &cim_op, &special_write,
                              &vcim_lane_increment}) {
      for (double p : e->parts) {
        if (!(p >= 0)) throw ConfigError("energy components must be non-negative");
      }
    }
    if (memory_latency < 1) throw ConfigError("memory_latency must be at least 1");
  }

  bool operator==(const EnergyConfig&) const = default;
};

/// Keys: `<record>.<component>` (e.g. cim_op.bitline) and memory_latency.
inline void apply_config(const KeyValueConfig& cfg, EnergyConfig& e) {
  const std::pair<const char*, OpEnergy*> records[] = {
      {"baseline_read", &e.baseline_read}, {"baseline_write", &e.baseline_write},
      {"cim_read", &e.cim_read},           {"cim_write", &e.cim_write},
      {"cim_op", &e.cim_op},               {"special_write", &e.special_write},
      {"vcim_lane", &e.vcim_lane_increment}};
  for (auto [name, rec] : records) {
    for (std::size_t c = 0; c < kComponents; ++c) {
      cfg.get(std::string(name) + "." + kComponentNames[c], rec->parts[c]);
    }
  }
  cfg.get("memory_latency", e.memory_latency);
  e.validate();
}

/// Fig.-13-style stacking categories.
enum class Category : unsigned { Read, Write, Cim, NmCorrections };
inline constexpr std::array<const char*, 4> kCategoryNames{"Read", "Write", "CiM", "NMCorrections"};

inline Category category_of(OpKind k) {
  switch (k) {
    case OpKind::BaselineRead:
    case OpKind::CimRead: return Category::Read;
    case OpKind::BaselineWrite:
    case OpKind::CimWrite:
    case OpKind::SpecialWrite: return Category::Write;
    case OpKind::CimOp:
    case OpKind::Vcim4:
    case OpKind::Vcim8: return Category::Cim;
    case OpKind::NmCorrection: return Category::NmCorrections;
  }
  return Category::Read;
}

struct KindRow {
  OpKind kind{};
  std::uint64_t count = 0;
  double energy = 0;
  std::uint64_t cycles = 0;
};

struct EnergyReport {
  std::array<KindRow, kOpKinds> kinds{};
  OpEnergy components{};
  std::array<OpEnergy, 4> categories{};
  double total = 0;
  std::uint64_t accesses = 0;
  std::uint64_t cycles = 0;

  double category_total(Category c) const { return categories[static_cast<unsigned>(c)].total(); }
};

class EnergyLedger {
 public:
  EnergyLedger() = default;
  explicit EnergyLedger(EnergyConfig config) : config_(std::move(config)) { config_.validate(); }

  const EnergyConfig& config() const { return config_; }

  void charge(OpKind k, std::uint64_t count = 1) { counts_[static_cast<unsigned>(k)] += count; }

  std::uint64_t count(OpKind k) const { return counts_[static_cast<unsigned>(k)]; }

  std::uint64_t accesses() const {
    std::uint64_t a = 0;
    for (std::size_t i = 0; i < kOpKinds; ++i) a += counts_[i] * EnergyConfig::accesses(static_cast<OpKind>(i));
    return a;
  }

  std::uint64_t cycles() const { return accesses() * static_cast<std::uint64_t>(config_.memory_latency); }

  double energy(OpKind k) const { return static_cast<double>(count(k)) * config_.energy(k).total(); }

  double total_energy() const {
    double t = 0;
    for (std::size_t i = 0; i < kOpKinds; ++i) t += energy(static_cast<OpKind>(i));
    return t;
  }

  double nm_correction_energy() const { return energy(OpKind::NmCorrection); }

  void merge(const EnergyLedger& other) {
    if (!(other.config_ == config_)) throw Error("cannot merge ledgers with different energy configs");
    for (std::size_t i = 0; i < kOpKinds; ++i) counts_[i] += other.counts_[i];
  }

  void reset() { counts_.fill(0); }

  bool operator==(const EnergyLedger&) const = default;

 private:
  EnergyConfig config_{};
  std::array<std::uint64_t, kOpKinds> counts_{};
};

inline EnergyReport report(const EnergyLedger& ledger) {
  EnergyReport r;
  const auto& cfg = ledger.config();
  for (std::size_t i = 0; i < kOpKinds; ++i) {
    const auto k = static_cast<OpKind>(i);
    const std::uint64_t n = ledger.count(k);
    const OpEnergy per = cfg.energy(k);
    auto& row = r.kinds[i];
    row.kind = k;
    row.count = n;
    row.energy = static_cast<double>(n) * per.total();
    row.cycles = n * EnergyConfig::accesses(k) * static_cast<std::uint64_t>(cfg.memory_latency);
    const OpEnergy part = per.scaled(static_cast<double>(n));
    r.components += part;
    r.categories[static_cast<unsigned>(category_of(k))] += part;
    r.total += row.energy;
    r.accesses += n * EnergyConfig::accesses(k);
    r.cycles += row.cycles;
  }
  return r;
}

/// Energy of `r` normalized to `baseline`; 0 when the baseline is empty.
inline double normalized_ratio(const EnergyReport& r, const EnergyReport& baseline) {
  return baseline.total > 0 ? r.total / baseline.total : 0.0;
}

inline void write_kind_csv(std::ostream& out, const EnergyReport& r) {
  out << "kind,count,energy,cycles\n";
  char buf[160];
  for (const auto& row : r.kinds) {
    if (row.count == 0) continue;
    std::snprintf(buf, sizeof buf, "%s,%llu,%.9g,%llu\n", to_string(row.kind),
                  static_cast<unsigned long long>(row.count), row.energy,
                  static_cast<unsigned long long>(row.cycles));
    out << buf;
  }
}

inline void write_breakdown_csv(std::ostream& out, const EnergyReport& r, const std::string& label = "run") {
  out << "label,category";
  for (const char* c : kComponentNames) out << ',' << c;
  out << ",total\n";
  char buf[64];
  for (std::size_t c = 0; c < 4; ++c) {
    out << label << ',' << kCategoryNames[c];
    for (double p : r.categories[c].parts) {
      std::snprintf(buf, sizeof buf, ",%.9g", p);
      out << buf;
    }
    std::snprintf(buf, sizeof buf, ",%.9g\n", r.categories[c].total());
    out << buf;
  }
}

}  // namespace sttcim::energy
