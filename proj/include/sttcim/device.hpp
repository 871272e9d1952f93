#pragma once

// Resistive model of STT-MRAM bit-cells, reference stacks and sense
// amplifiers, and Monte Carlo estimation of decision failures under
// process variation.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ostream>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "sttcim/common.hpp"
#include "sttcim/config.hpp"

namespace sttcim::device {

/// Electrical parameters of the MTJ and its access device.
struct DeviceParams {
  double ra_product = 18.0;        ///< ohm * um^2
  double tmr = 1.24;               ///< (R_AP - R_P) / R_P
  double mtj_area = 0.0016;        ///< um^2 (40 nm x 40 nm)
  double access_resistance = 3000.0;
  double read_voltage = 0.1;
  double ref_resistance = 18225.0;  ///< midpoint of R_P and R_AP for the values above
  /// Shared bitline/source-line path resistance. Only the read-disturb proxy
  /// uses it; the sensing model treats the bitline as voltage-clamped.
  double line_resistance = 500.0;

  /// Checks R_P < R_REF < R_AP, positive access resistance and bias.
  void validate() const;
};

struct Resistances {
  double r_p = 0;
  double r_ap = 0;
};

/// R_P = RA / area and R_AP = R_P * (1 + TMR). Does not enforce TMR > 0;
/// that belongs to `DeviceParams::validate`.
inline Resistances nominal_resistances(const DeviceParams& p) {
  if (!(p.ra_product > 0) || !(p.mtj_area > 0)) {
    throw ConfigError("RA product and MTJ area must be positive");
  }
  if (!(p.tmr >= 0)) throw ConfigError("TMR must be non-negative");
  double r_p = p.ra_product / p.mtj_area;
  return {r_p, r_p * (1.0 + p.tmr)};
}

inline void DeviceParams::validate() const {
  auto [r_p, r_ap] = nominal_resistances(*this);
  if (!(r_ap > r_p)) throw ConfigError("TMR must be positive (R_AP > R_P)");
  if (!(access_resistance > 0)) throw ConfigError("access resistance must be positive");
  if (!(read_voltage > 0)) throw ConfigError("read voltage must be positive");
  if (!(line_resistance >= 0)) throw ConfigError("line resistance must be non-negative");
  if (!(ref_resistance > r_p && ref_resistance < r_ap)) {
    throw ConfigError("reference resistance must lie strictly between R_P and R_AP");
  }
}

/// Current through one bit-cell: V / (R_t + R_mtj).
inline double cell_current(double r_mtj, double r_t, double v) {
  if (!(r_mtj > 0) || !(r_t > 0)) throw Error("cell_current: resistances must be positive");
  return v / (r_t + r_mtj);
}

/// Nominal source-line and reference currents.
struct CurrentLevels {
  double i_p = 0, i_ap = 0;
  double i_pp = 0, i_ap_p = 0, i_apap = 0;
  double i_ref_read = 0, i_ref_or = 0, i_ref_and = 0;

  void validate() const {
    bool ok = i_apap < i_ref_or && i_ref_or < i_ap_p && i_ap_p < i_ref_and &&
              i_ref_and < i_pp && i_ap < i_ref_read && i_ref_read < i_p;
    if (!ok) throw ConfigError("current levels violate the reference ordering");
  }
};

inline CurrentLevels current_levels(const DeviceParams& p) {
  p.validate();
  auto [r_p, r_ap] = nominal_resistances(p);
  CurrentLevels c;
  c.i_p = cell_current(r_p, p.access_resistance, p.read_voltage);
  c.i_ap = cell_current(r_ap, p.access_resistance, p.read_voltage);
  c.i_pp = 2 * c.i_p;
  c.i_ap_p = c.i_p + c.i_ap;
  c.i_apap = 2 * c.i_ap;
  c.i_ref_read = cell_current(p.ref_resistance, p.access_resistance, p.read_voltage);
  c.i_ref_or = c.i_ref_read + c.i_ap;
  c.i_ref_and = c.i_ref_read + c.i_p;
  c.validate();
  return c;
}

/// Relative sigmas of the variation sources plus the sensitivities that map
/// them onto resistances.
struct VariationSpec {
  double sigma_tox_rel = 0.02;
  double sigma_area_rel = 0.05;
  double sigma_vt_rel = 0.05;
  double tox_sensitivity = 2.0;
  double vt_sensitivity = 1.0;
  /// Reference-stack cells take nominal values instead of their own draws.
  bool ideal_references = false;

  static VariationSpec none() { return {0, 0, 0, 2.0, 1.0, false}; }

  /// All three sigmas multiplied by `factor`.
  VariationSpec scaled(double factor) const {
    VariationSpec v = *this;
    v.sigma_tox_rel *= factor;
    v.sigma_area_rel *= factor;
    v.sigma_vt_rel *= factor;
    return v;
  }

  void validate() const {
    if (sigma_tox_rel < 0 || sigma_area_rel < 0 || sigma_vt_rel < 0) {
      throw ConfigError("variation sigmas must be non-negative");
    }
    if (tox_sensitivity < 0 || vt_sensitivity < 0) {
      throw ConfigError("variation sensitivities must be non-negative");
    }
  }
};

/// One draw of the three variation sources for a physical bit-cell,
/// expressed as multiplicative factors.
struct VariationDraw {
  double mtj_factor = 1.0;     ///< applied to both R_P and R_AP
  double access_factor = 1.0;  ///< applied to R_t
};

/// Deterministic in (seed, index): same key, same draw.
inline VariationDraw draw_variation(const VariationSpec& v, std::uint64_t seed, std::uint64_t index) {
  SplitMix64 gen(seed, index);
  std::normal_distribution<double> unit(0.0, 1.0);
  constexpr int kMaxRetries = 16;
  for (int attempt = 0; attempt < kMaxRetries; ++attempt) {
    double e_tox = v.sigma_tox_rel * unit(gen);
    double e_area = v.sigma_area_rel * unit(gen);
    double e_vt = v.sigma_vt_rel * unit(gen);
    double area = 1.0 + e_area;
    double access = 1.0 + v.vt_sensitivity * e_vt;
    if (area > 0 && access > 0) {
      return {std::exp(v.tox_sensitivity * e_tox) / area, access};
    }
  }
  throw Error("variation draw produced non-positive resistances repeatedly");
}

/// Sampled resistances of one data bit-cell, for both stored states.
struct CellSample {
  double r_p_eff = 0;
  double r_ap_eff = 0;
  double r_t_eff = 0;

  double r_mtj(bool is_p) const { return is_p ? r_p_eff : r_ap_eff; }
  double current(bool is_p, double v) const { return cell_current(r_mtj(is_p), r_t_eff, v); }
};

inline CellSample sample_cell(const DeviceParams& p, const VariationSpec& v, std::uint64_t seed,
                              std::uint64_t index) {
  auto [r_p, r_ap] = nominal_resistances(p);
  VariationDraw d = draw_variation(v, seed, index);
  return {r_p * d.mtj_factor, r_ap * d.mtj_factor, p.access_resistance * d.access_factor};
}

/// Cells of one reference stack, in enable order: R_REF, R_AP, R_P.
enum class StackCell : unsigned { Ref = 0, AntiParallel = 1, Parallel = 2 };

struct ReferenceStack {
  std::array<double, 3> cell_currents{};

  /// Reference current synthesized by the enabled subset of cells.
  double current(const std::array<bool, 3>& enable) const {
    double sum = 0;
    for (std::size_t k = 0; k < 3; ++k) {
      if (enable[k]) sum += cell_currents[k];
    }
    return sum;
  }
};

inline ReferenceStack nominal_stack(const DeviceParams& p) {
  auto [r_p, r_ap] = nominal_resistances(p);
  double rt = p.access_resistance, v = p.read_voltage;
  return {{cell_current(p.ref_resistance, rt, v), cell_current(r_ap, rt, v), cell_current(r_p, rt, v)}};
}

/// Samples the three stack cells from indices first_index .. first_index+2.
inline ReferenceStack sample_stack(const DeviceParams& p, const VariationSpec& v, std::uint64_t seed,
                                   std::uint64_t first_index) {
  if (v.ideal_references) return nominal_stack(p);
  auto [r_p, r_ap] = nominal_resistances(p);
  const std::array<double, 3> nominal{p.ref_resistance, r_ap, r_p};
  ReferenceStack s;
  for (std::size_t k = 0; k < 3; ++k) {
    VariationDraw d = draw_variation(v, seed, first_index + k);
    s.cell_currents[k] = cell_current(nominal[k] * d.mtj_factor, p.access_resistance * d.access_factor,
                                      p.read_voltage);
  }
  return s;
}

inline constexpr std::array<bool, 3> kReadRef{true, false, false};
inline constexpr std::array<bool, 3> kOrRef{true, true, false};
inline constexpr std::array<bool, 3> kAndRef{true, false, true};

/// Positive sense-amplifier output; exact equality resolves to 0.
inline bool sense_bit(double i_sl, double i_ref) { return i_sl > i_ref; }

/// Number of parallel cells on the bitline implied by the two comparisons:
/// 0 = AP-AP, 1 = AP-P, 2 = P-P.
inline int classify_two_cell(double i_sl, double i_ref_or, double i_ref_and) {
  return static_cast<int>(sense_bit(i_sl, i_ref_or)) + static_cast<int>(sense_bit(i_sl, i_ref_and));
}

/// Current through cell A when it shares the bitline path (line resistance
/// in series) with cell B. Both arguments are branch resistances R_mtj + R_t.
inline double shared_path_cell_current(double branch_a, double branch_b, double line, double v) {
  double parallel = branch_a * branch_b / (branch_a + branch_b);
  double total = v / (line + parallel);
  return total * branch_b / (branch_a + branch_b);
}

inline double lone_path_cell_current(double branch, double line, double v) { return v / (line + branch); }

struct FailureReport {
  std::uint64_t samples = 0;
  double read_decision_rate = 0;
  double cim_decision_rate = 0;
  double mean_cim_per_cell_current = 0;
  double mean_read_cell_current = 0;
  /// Fraction of samples whose per-cell CiM current is below the read current.
  double disturb_reduced_fraction = 0;
  double margin_low = 0;   ///< mean of I_AP-P - I_ref-or
  double margin_high = 0;  ///< mean of I_ref-and - I_AP-P

  bool operator==(const FailureReport&) const = default;
};

namespace detail {

struct ChunkTally {
  std::uint64_t read_fail = 0;
  std::uint64_t cim_fail = 0;
  std::uint64_t disturb_reduced = 0;
  double cim_cell_current = 0;
  double read_cell_current = 0;
  double margin_low = 0;
  double margin_high = 0;
};

// Stream indices per Monte Carlo sample: data cells A and B, then the left
// (OR) and right (AND) reference stacks.
inline constexpr std::uint64_t kIndicesPerSample = 8;

inline ChunkTally run_chunk(const DeviceParams& p, const VariationSpec& var, std::uint64_t seed,
                            std::uint64_t begin, std::uint64_t end) {
  ChunkTally t;
  const double v = p.read_voltage;
  for (std::uint64_t s = begin; s < end; ++s) {
    const std::uint64_t base = s * kIndicesPerSample;
    CellSample a = sample_cell(p, var, seed, base + 0);
    CellSample b = sample_cell(p, var, seed, base + 1);
    ReferenceStack left = sample_stack(p, var, seed, base + 2);
    ReferenceStack right = sample_stack(p, var, seed, base + 5);

    const double ref_read = left.current(kReadRef);
    const double ref_or = left.current(kOrRef);
    const double ref_and = right.current(kAndRef);

    const double ia_p = a.current(true, v), ia_ap = a.current(false, v);
    const double ib_p = b.current(true, v), ib_ap = b.current(false, v);

    t.read_fail += static_cast<std::uint64_t>(!sense_bit(ia_p, ref_read));
    t.read_fail += static_cast<std::uint64_t>(sense_bit(ia_ap, ref_read));

    const double ia[2] = {ia_ap, ia_p};
    const double ib[2] = {ib_ap, ib_p};
    for (int sa = 0; sa < 2; ++sa) {
      for (int sb = 0; sb < 2; ++sb) {
        int sensed = classify_two_cell(ia[sa] + ib[sb], ref_or, ref_and);
        t.cim_fail += static_cast<std::uint64_t>(sensed != sa + sb);
      }
    }

    const double i_ap_p = ia_p + ib_ap;
    t.margin_low += i_ap_p - ref_or;
    t.margin_high += ref_and - i_ap_p;

    const double branch_a = a.r_p_eff + a.r_t_eff;
    const double branch_b = b.r_p_eff + b.r_t_eff;
    const double shared = shared_path_cell_current(branch_a, branch_b, p.line_resistance, v);
    const double lone = lone_path_cell_current(branch_a, p.line_resistance, v);
    t.cim_cell_current += shared;
    t.read_cell_current += lone;
    t.disturb_reduced += static_cast<std::uint64_t>(shared < lone);
  }
  return t;
}

}  // namespace detail

/// Monte Carlo over `n` samples. Samples are split into fixed-size chunks
/// reduced in chunk order, so the result does not depend on `threads`.
inline FailureReport monte_carlo_failures(const DeviceParams& p, const VariationSpec& var, std::uint64_t n,
                                          std::uint64_t seed, unsigned threads = 1) {
  if (n == 0) throw Error("monte_carlo_failures: need at least one sample");
  p.validate();
  var.validate();
  constexpr std::uint64_t kChunk = 1 << 14;
  const std::uint64_t chunks = (n + kChunk - 1) / kChunk;
  std::vector<detail::ChunkTally> tallies(chunks);
  auto work = [&](std::uint64_t first_chunk, std::uint64_t stride) {
    for (std::uint64_t c = first_chunk; c < chunks; c += stride) {
      tallies[c] = detail::run_chunk(p, var, seed, c * kChunk, std::min(n, (c + 1) * kChunk));
    }
  };
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(chunks)));
  if (threads == 1) {
    work(0, 1);
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work, t, threads);
    for (auto& th : pool) th.join();
  }

  detail::ChunkTally total;
  for (const auto& t : tallies) {
    total.read_fail += t.read_fail;
    total.cim_fail += t.cim_fail;
    total.disturb_reduced += t.disturb_reduced;
    total.cim_cell_current += t.cim_cell_current;
    total.read_cell_current += t.read_cell_current;
    total.margin_low += t.margin_low;
    total.margin_high += t.margin_high;
  }
  const double dn = static_cast<double>(n);
  FailureReport r;
  r.samples = n;
  r.read_decision_rate = static_cast<double>(total.read_fail) / (2 * dn);
  r.cim_decision_rate = static_cast<double>(total.cim_fail) / (4 * dn);
  r.mean_cim_per_cell_current = total.cim_cell_current / dn;
  r.mean_read_cell_current = total.read_cell_current / dn;
  r.disturb_reduced_fraction = static_cast<double>(total.disturb_reduced) / dn;
  r.margin_low = total.margin_low / dn;
  r.margin_high = total.margin_high / dn;
  return r;
}

inline void write_failure_csv(std::ostream& out, const FailureReport& r) {
  char line[256];
  std::snprintf(line, sizeof line, "%llu,%.9g,%.9g,%.6f,%.6f\n", static_cast<unsigned long long>(r.samples),
                r.read_decision_rate, r.cim_decision_rate, r.margin_low * 1e6, r.margin_high * 1e6);
  out << "samples,read_decision_rate,cim_decision_rate,margin_low_uA,margin_high_uA\n" << line;
}

/// Reads device and variation keys; absent keys keep their current values.
/// An absent ref_resistance_ohm is re-derived as the R_P/R_AP midpoint.
inline void apply_config(const KeyValueConfig& cfg, DeviceParams& p, VariationSpec& v) {
  // Percent-valued keys; fields stay bit-identical when the key is absent.
  auto get_pct = [&](const char* key, double& field) {
    if (!cfg.has(key)) return;
    double pct = 0;
    cfg.get(key, pct);
    field = pct / 100.0;
  };
  cfg.get("ra_product_ohm_um2", p.ra_product);
  get_pct("tmr_pct", p.tmr);
  if (cfg.has("mtj_side_nm")) {
    double side_nm = 0;
    cfg.get("mtj_side_nm", side_nm);
    p.mtj_area = (side_nm / 1000.0) * (side_nm / 1000.0);
  }
  cfg.get("access_resistance_ohm", p.access_resistance);
  cfg.get("read_voltage_v", p.read_voltage);
  cfg.get("line_resistance_ohm", p.line_resistance);
  if (cfg.has("ref_resistance_ohm")) {
    cfg.get("ref_resistance_ohm", p.ref_resistance);
  } else {
    auto [r_p, r_ap] = nominal_resistances(p);
    p.ref_resistance = 0.5 * (r_p + r_ap);
  }
  get_pct("tox_sigma_pct", v.sigma_tox_rel);
  get_pct("area_sigma_pct", v.sigma_area_rel);
  get_pct("vt_sigma_pct", v.sigma_vt_rel);
  cfg.get("tox_sensitivity", v.tox_sensitivity);
  cfg.get("vt_sensitivity", v.vt_sensitivity);
  cfg.get("ideal_references", v.ideal_references);
  p.validate();
  v.validate();
}

}  // namespace sttcim::device
