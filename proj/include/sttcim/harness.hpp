#pragma once

// Benchmark kernels and the experiment runner. Every kernel has a baseline
// program that runs on a plain STT-MRAM scratchpad with SECDED, and CiM /
// vector variants that run on STT-CiM with EC3ED4. Type I variants come from
// the peephole transform; Type II and III variants are written by hand
// around spare-row fills and column replication.

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "sttcim/array.hpp"
#include "sttcim/cpu.hpp"
#include "sttcim/energy.hpp"
#include "sttcim/mapper.hpp"
#include "sttcim/xform.hpp"

// JSON form of the run statistics (found by argument-dependent lookup).
namespace sttcim::cpu {

inline void to_json(nlohmann::json& j, const RunStats& s) {
  j = {{"instructions", s.instructions}, {"writes", s.writes},         {"cnc_reads", s.cnc_reads},
       {"cim_accesses", s.cim_accesses}, {"vcim_accesses", s.vcim_accesses}, {"special_writes", s.special_writes},
       {"nm_corrections", s.nm_corrections}, {"cycles", s.cycles},    {"energy", s.energy}};
}

inline void from_json(const nlohmann::json& j, RunStats& s) {
  j.at("instructions").get_to(s.instructions);
  j.at("writes").get_to(s.writes);
  j.at("cnc_reads").get_to(s.cnc_reads);
  j.at("cim_accesses").get_to(s.cim_accesses);
  j.at("vcim_accesses").get_to(s.vcim_accesses);
  j.at("special_writes").get_to(s.special_writes);
  j.at("nm_corrections").get_to(s.nm_corrections);
  j.at("cycles").get_to(s.cycles);
  j.at("energy").get_to(s.energy);
}

}  // namespace sttcim::cpu

namespace sttcim::harness {

enum class Mode { Base, Cim, Vec4, Vec8 };

inline const char* to_string(Mode m) {
  switch (m) {
    case Mode::Base: return "base";
    case Mode::Cim: return "cim";
    case Mode::Vec4: return "vec4";
    case Mode::Vec8: return "vec8";
  }
  return "?";
}

inline Mode parse_mode(const std::string& s) {
  for (Mode m : {Mode::Base, Mode::Cim, Mode::Vec4, Mode::Vec8}) {
    if (s == to_string(m)) return m;
  }
  throw ConfigError("unknown mode '" + s + "'");
}

/// A kernel built for one size and seed: placement, initial memory, and
/// one program per supported mode.
struct KernelInstance {
  std::string name;
  mapper::MappingPlan plan;
  xform::MemoryImage inputs;
  std::map<Mode, cpu::Program> programs;
  std::vector<std::string> outputs;  ///< arrays compared across modes
  std::vector<std::pair<Address, Address>> scratch;  ///< written by only some variants
  std::vector<xform::ReportEntry> transform_report;

  bool supports(Mode m) const { return programs.count(m) != 0; }
  const cpu::Program& program(Mode m) const {
    auto it = programs.find(m);
    if (it == programs.end()) throw ConfigError(name + " has no " + to_string(m) + " variant");
    return it->second;
  }
};

namespace detail {

/// Assembly text builder; `{NAME}` placeholders are substituted on build.
class Asm {
 public:
  Asm& line(const std::string& s) {
    text_ += s;
    text_ += '\n';
    return *this;
  }
  Asm& set(const std::string& key, std::int64_t v) {
    vars_["{" + key + "}"] = std::to_string(v);
    return *this;
  }
  std::string str() const {
    std::string out = text_;
    for (const auto& [k, v] : vars_) {
      for (auto pos = out.find(k); pos != std::string::npos; pos = out.find(k, pos + v.size())) {
        out.replace(pos, k.size(), v);
      }
    }
    return out;
  }
  cpu::Program build() const { return cpu::assemble(str()); }

 private:
  std::string text_;
  std::map<std::string, std::string> vars_;
};

inline std::vector<Word> random_words(std::uint64_t seed, std::uint64_t stream, std::uint32_t n,
                                      Word modulus = 0) {
  SplitMix64 g(seed, stream);
  std::vector<Word> v(n);
  for (auto& w : v) {
    const auto r = static_cast<Word>(g() >> 32);
    w = modulus ? r % modulus : r;
  }
  return v;
}

inline void load(KernelInstance& k, const std::string& array, const std::vector<Word>& values) {
  for (std::uint32_t i = 0; i < values.size(); ++i) k.inputs.emplace_back(k.plan.address_of(array, i), values[i]);
}

inline Address base(const KernelInstance& k, const std::string& array) {
  if (!k.plan.is_linear(array)) throw ConfigError(k.name + ": array " + array + " is not contiguous");
  return k.plan.get(array).length ? k.plan.address_of(array, 0) : 0;
}

inline void require_pow2_rows(const ArrayConfig& cfg) {
  if (!std::has_single_bit(cfg.words_per_row)) throw ConfigError("kernel needs a power-of-two words_per_row");
}

inline unsigned single_bank(const KernelInstance& k, const std::string& array) {
  const auto banks = k.plan.banks_of(array);
  if (banks.size() > 1) throw ConfigError(k.name + ": array " + array + " must fit in one bank");
  return banks.empty() ? 0 : banks.front();
}

inline void add_transformed(KernelInstance& k) {
  xform::Result r = xform::transform(k.program(Mode::Base), k.plan);
  if (r.applied() == 0) throw Error(k.name + ": transform found nothing to rewrite");
  k.transform_report = std::move(r.report);
  k.programs[Mode::Cim] = std::move(r.program);
}

inline std::pair<Address, Address> spare_window(const ArrayConfig& cfg) {
  const AddressLayout l(cfg);
  return {l.spare_base(), l.end()};
}

}  // namespace detail

/// C[i] = A[i] ^ B[i]: keystream application (Type I).
inline KernelInstance build_xorcipher(std::uint32_t n, std::uint64_t seed, const ArrayConfig& cfg) {
  KernelInstance k;
  k.name = "xorcipher";
  k.plan = mapper::plan_type1(n, cfg, {{"C", n}});
  k.outputs = {"C"};
  detail::load(k, "A", detail::random_words(seed, 1, n));
  detail::load(k, "B", detail::random_words(seed, 2, n));
  detail::Asm a;
  a.line(".ptr r1 A i").line(".ptr r2 B i");
  a.line("  ADDI r1, r0, {A}").line("  ADDI r2, r0, {B}").line("  ADDI r3, r0, {C}").line("  ADDI r4, r0, {N}");
  a.line("  BEQ r4, r0, done");
  a.line("loop:").line("  LDW r5, 0(r1)").line("  LDW r6, 0(r2)").line("  XOR r7, r5, r6").line("  STW r7, 0(r3)");
  a.line("  ADDI r1, r1, 1").line("  ADDI r2, r2, 1").line("  ADDI r3, r3, 1").line("  ADDI r4, r4, -1");
  a.line("  BNE r4, r0, loop").line("done:").line("  HALT");
  a.set("A", detail::base(k, "A")).set("B", detail::base(k, "B")).set("C", detail::base(k, "C")).set("N", n);
  k.programs[Mode::Base] = a.build();
  if (n > 0) detail::add_transformed(k);
  return k;
}

/// S[0] = sum of A[i] + B[i] (Type I ADD), plus vector variants.
inline KernelInstance build_vecsum(std::uint32_t n, std::uint64_t seed, const ArrayConfig& cfg) {
  KernelInstance k;
  k.name = "vecsum";
  k.plan = mapper::plan_type1(n, cfg, {{"S", 1}});
  k.outputs = {"S"};
  detail::load(k, "A", detail::random_words(seed, 1, n));
  detail::load(k, "B", detail::random_words(seed, 2, n));
  auto vars = [&](detail::Asm& a) {
    a.set("A", detail::base(k, "A")).set("B", detail::base(k, "B")).set("S", detail::base(k, "S")).set("N", n);
  };
  detail::Asm a;
  a.line(".ptr r1 A i").line(".ptr r2 B i").line(".live r8");
  a.line("  ADDI r1, r0, {A}").line("  ADDI r2, r0, {B}").line("  ADDI r4, r0, {N}").line("  ADDI r8, r0, 0");
  a.line("  BEQ r4, r0, done");
  a.line("loop:").line("  LDW r5, 0(r1)").line("  LDW r6, 0(r2)").line("  ADD r7, r5, r6").line("  ADD r8, r8, r7");
  a.line("  ADDI r1, r1, 1").line("  ADDI r2, r2, 1").line("  ADDI r4, r4, -1").line("  BNE r4, r0, loop");
  a.line("done:").line("  ADDI r3, r0, {S}").line("  STW r8, 0(r3)").line("  HALT");
  vars(a);
  k.programs[Mode::Base] = a.build();
  if (n > 0) detail::add_transformed(k);

  for (unsigned lanes : {4u, 8u}) {
    if (lanes > cfg.vector_length || k.plan.pattern != mapper::Pattern::Type1Aligned) continue;
    detail::Asm v;
    v.line(".live r8");
    v.line("  ADDI r1, r0, {A}").line("  ADDI r2, r0, {B}").line("  ADDI r4, r0, {NV}").line("  ADDI r9, r0, {NT}");
    v.line("  ADDI r8, r0, 0").line("  BEQ r4, r0, tail");
    v.line("vloop:").line("  VCIM.ADD.SUM.{L} r1, r2, r7").line("  ADD r8, r8, r7");
    v.line("  ADDI r1, r1, {L}").line("  ADDI r2, r2, {L}").line("  ADDI r4, r4, -1").line("  BNE r4, r0, vloop");
    v.line("tail:").line("  BEQ r9, r0, done");
    v.line("sloop:").line("  CIMADD r1, r2, r7").line("  ADD r8, r8, r7");
    v.line("  ADDI r1, r1, 1").line("  ADDI r2, r2, 1").line("  ADDI r9, r9, -1").line("  BNE r9, r0, sloop");
    v.line("done:").line("  ADDI r3, r0, {S}").line("  STW r8, 0(r3)").line("  HALT");
    vars(v);
    v.set("NV", n / lanes).set("NT", n % lanes).set("L", lanes);
    k.programs[lanes == 4 ? Mode::Vec4 : Mode::Vec8] = v.build();
  }
  return k;
}

/// O[i] = A[i] | B[i] and X[i] = A[i] & B[i]: bitmap union and intersection
/// (Type I OR / AND).
inline KernelInstance build_blit(std::uint32_t n, std::uint64_t seed, const ArrayConfig& cfg) {
  KernelInstance k;
  k.name = "blit";
  k.plan = mapper::plan_type1(n, cfg, {{"O", n}, {"X", n}});
  k.outputs = {"O", "X"};
  detail::load(k, "A", detail::random_words(seed, 1, n));
  detail::load(k, "B", detail::random_words(seed, 2, n));
  detail::Asm a;
  a.line(".ptr r1 A i").line(".ptr r2 B i");
  for (const char* pass : {"OR", "AND"}) {
    const std::string p = pass;
    a.line("  ADDI r1, r0, {A}").line("  ADDI r2, r0, {B}");
    a.line(std::string("  ADDI r3, r0, ") + (p == "OR" ? "{O}" : "{X}")).line("  ADDI r4, r0, {N}");
    a.line("  BEQ r4, r0, end" + p);
    a.line("loop" + p + ":").line("  LDW r5, 0(r1)").line("  LDW r6, 0(r2)").line("  " + p + " r7, r5, r6");
    a.line("  STW r7, 0(r3)").line("  ADDI r1, r1, 1").line("  ADDI r2, r2, 1").line("  ADDI r3, r3, 1");
    a.line("  ADDI r4, r4, -1").line("  BNE r4, r0, loop" + p).line("end" + p + ":");
  }
  a.line("  HALT");
  a.set("A", detail::base(k, "A")).set("B", detail::base(k, "B")).set("O", detail::base(k, "O"));
  a.set("X", detail::base(k, "X")).set("N", n);
  k.programs[Mode::Base] = a.build();
  if (n > 0) detail::add_transformed(k);
  return k;
}

/// Naive substring search of pattern P (m words) in text T (n words): F[j]
/// flags a match at j, R[0] counts matches. The CiM variant replicates each
/// P[k] across a row so any T element aligns with it (Type III).
inline KernelInstance build_strmatch(std::uint32_t n, std::uint64_t seed, const ArrayConfig& cfg,
                                     std::uint32_t m = 4) {
  if (m == 0) throw ConfigError("strmatch needs a non-empty pattern");
  detail::require_pow2_rows(cfg);
  KernelInstance k;
  k.name = "strmatch";
  const std::uint32_t positions = n >= m ? n - m + 1 : 0;
  k.plan = mapper::plan_type3(m, n, cfg, {{"F", positions}, {"R", 1}}, "P", "T");
  k.outputs = {"F", "R"};
  std::vector<Word> pat = detail::random_words(seed, 3, m, 4);
  std::vector<Word> text = detail::random_words(seed, 4, n, 4);
  SplitMix64 g(seed, 5);
  for (std::uint32_t t = 0; positions > 0 && t < std::max<std::uint32_t>(1, n / 64); ++t) {
    const auto at = static_cast<std::uint32_t>(g() % positions);
    std::copy(pat.begin(), pat.end(), text.begin() + at);
  }
  detail::load(k, "P", pat);
  detail::load(k, "T", text);
  detail::single_bank(k, "T");

  auto vars = [&](detail::Asm& a) {
    a.set("T", detail::base(k, "T")).set("P", detail::base(k, "P")).set("F", detail::base(k, "F"));
    a.set("R", detail::base(k, "R")).set("M", m).set("NP", positions);
  };
  auto header = [](detail::Asm& a) {
    a.line(".live r20").line("  ADDI r20, r0, 0").line("  ADDI r1, r0, {T}").line("  ADDI r3, r0, {F}");
    a.line("  ADDI r4, r0, {NP}").line("  BEQ r4, r0, done");
  };
  auto footer = [](detail::Asm& a) {
    a.line("kend:").line("  STW r8, 0(r3)").line("  ADD r20, r20, r8").line("  ADDI r1, r1, 1");
    a.line("  ADDI r3, r3, 1").line("  ADDI r4, r4, -1").line("  BNE r4, r0, jloop");
    a.line("done:").line("  ADDI r2, r0, {R}").line("  STW r20, 0(r2)").line("  HALT");
  };

  detail::Asm b;
  header(b);
  b.line("jloop:").line("  ADDI r5, r1, 0").line("  ADDI r6, r0, {P}").line("  ADDI r7, r0, {M}").line("  ADDI r8, r0, 1");
  b.line("kloop:").line("  LDW r10, 0(r5)").line("  LDW r11, 0(r6)").line("  XOR r12, r10, r11");
  b.line("  BEQ r12, r0, same").line("  ADDI r8, r0, 0").line("  JMP kend");
  b.line("same:").line("  ADDI r5, r5, 1").line("  ADDI r6, r6, 1").line("  ADDI r7, r7, -1").line("  BNE r7, r0, kloop");
  footer(b);
  vars(b);
  k.programs[Mode::Base] = b.build();

  const unsigned bank = detail::single_bank(k, "T");
  const AddressLayout layout = k.plan.layout();
  const unsigned wpr = cfg.words_per_row;
  const auto row0 = k.plan.replica_row(0, bank);
  if (!row0) throw Error("strmatch: plan lacks replica rows");
  const Address rep0 = layout.address_of({bank, *row0, 0});
  detail::Asm c;
  c.line(".live r20");
  for (std::uint32_t j = 0; j < m; ++j) {
    const auto row = k.plan.replica_row(j, bank);
    const Address slot0 = row ? layout.address_of({bank, *row, 0}) : 0;
    if (!row || slot0 != rep0 + j * wpr) throw Error("strmatch: replica rows must be consecutive");
    k.scratch.emplace_back(slot0, slot0 + wpr);
    c.line("  ADDI r11, r0, " + std::to_string(k.plan.address_of("P", j))).line("  LDW r10, 0(r11)");
    c.line("  ADDI r11, r0, " + std::to_string(slot0)).line("  REPL r10, r11");
  }
  c.line("  ADDI r21, r0, {WM}");
  c.line("  ADDI r20, r0, 0").line("  ADDI r1, r0, {T}").line("  ADDI r3, r0, {F}");
  c.line("  ADDI r4, r0, {NP}").line("  BEQ r4, r0, done");
  c.line("jloop:").line("  ADDI r5, r1, 0").line("  ADDI r22, r0, {REP}").line("  ADDI r7, r0, {M}").line("  ADDI r8, r0, 1");
  c.line("kloop:").line("  AND r13, r5, r21").line("  ADD r6, r22, r13").line("  CIMXOR r5, r6, r12");
  c.line("  BEQ r12, r0, same").line("  ADDI r8, r0, 0").line("  JMP kend");
  c.line("same:").line("  ADDI r5, r5, 1").line("  ADDI r22, r22, {W}").line("  ADDI r7, r7, -1").line("  BNE r7, r0, kloop");
  footer(c);
  vars(c);
  c.set("WM", wpr - 1).set("W", wpr).set("REP", rep0);
  k.programs[Mode::Cim] = c.build();
  return k;
}

/// Levenshtein distance between A (n words) and B (n words); R[0] holds
/// the distance. The baseline reloads A[i-1] in the inner loop because the
/// row stores may alias it. The CiM variant fills the spare row with A[i-1]
/// once per outer iteration and compares B[j-1] against it in place (Type II).
inline KernelInstance build_editdist(std::uint32_t n, std::uint64_t seed, const ArrayConfig& cfg) {
  detail::require_pow2_rows(cfg);
  KernelInstance k;
  k.name = "editdist";
  const std::uint32_t m = n;
  k.plan = mapper::plan_type2(m, n, cfg, {{"PREV", n + 1}, {"CUR", n + 1}, {"R", 1}});
  k.outputs = {"R", "PREV", "CUR"};
  k.scratch.push_back(detail::spare_window(cfg));
  detail::load(k, "A", detail::random_words(seed, 1, m, 4));
  detail::load(k, "B", detail::random_words(seed, 2, n, 4));
  const unsigned bank = detail::single_bank(k, "B");

  auto build = [&](bool cim) {
    detail::Asm a;
    a.line(".live r20");
    a.line("  ADDI r3, r0, {PREV}").line("  ADDI r9, r0, 0").line("  ADDI r7, r0, {N1}");
    a.line("init:").line("  STW r9, 0(r3)").line("  ADDI r9, r9, 1").line("  ADDI r3, r3, 1");
    a.line("  ADDI r7, r7, -1").line("  BNE r7, r0, init");
    a.line("  ADDI r17, r0, {PREV}").line("  ADDI r18, r0, {CUR}").line("  ADDI r1, r0, {A}");
    a.line("  ADDI r19, r0, 1").line("  ADDI r16, r0, {M}");
    if (cim) a.line("  ADDI r21, r0, {WM}").line("  ADDI r22, r0, {SP}");
    a.line("  BEQ r16, r0, finish");
    a.line("outer:").line("  STW r19, 0(r18)");
    if (cim) a.line("  LDW r10, 0(r1)").line("  SPWR r10, {MASK}");
    a.line("  ADDI r2, r0, {B}").line("  ADDI r3, r17, 0").line("  ADDI r4, r18, 0").line("  ADDI r7, r0, {N}");
    a.line("  BEQ r7, r0, swap");
    a.line("inner:");
    if (cim) {
      a.line("  AND r13, r2, r21").line("  ADD r6, r22, r13").line("  CIMXOR r2, r6, r12");
    } else {
      a.line("  LDW r10, 0(r1)").line("  LDW r11, 0(r2)").line("  XOR r12, r10, r11");
    }
    a.line("  ADDI r13, r0, 0").line("  BEQ r12, r0, eq").line("  ADDI r13, r0, 1");
    a.line("eq:").line("  LDW r14, 0(r3)").line("  ADD r14, r14, r13").line("  LDW r15, 1(r3)");
    a.line("  ADDI r15, r15, 1").line("  SLT r12, r15, r14").line("  BEQ r12, r0, k1").line("  ADD r14, r15, r0");
    a.line("k1:").line("  LDW r15, 0(r4)").line("  ADDI r15, r15, 1").line("  SLT r12, r15, r14");
    a.line("  BEQ r12, r0, k2").line("  ADD r14, r15, r0");
    a.line("k2:").line("  STW r14, 1(r4)").line("  ADDI r2, r2, 1").line("  ADDI r3, r3, 1").line("  ADDI r4, r4, 1");
    a.line("  ADDI r7, r7, -1").line("  BNE r7, r0, inner");
    a.line("swap:").line("  ADD r12, r17, r0").line("  ADD r17, r18, r0").line("  ADD r18, r12, r0");
    a.line("  ADDI r1, r1, 1").line("  ADDI r19, r19, 1").line("  ADDI r16, r16, -1").line("  BNE r16, r0, outer");
    a.line("finish:").line("  ADDI r3, r17, {N}").line("  LDW r20, 0(r3)").line("  ADDI r2, r0, {R}");
    a.line("  STW r20, 0(r2)").line("  HALT");
    a.set("PREV", detail::base(k, "PREV")).set("CUR", detail::base(k, "CUR")).set("A", detail::base(k, "A"));
    a.set("B", detail::base(k, "B")).set("R", detail::base(k, "R")).set("N", n).set("N1", n + 1).set("M", m);
    a.set("WM", cfg.words_per_row - 1).set("SP", k.plan.layout().spare_address(bank, 0)).set("MASK", 1u << bank);
    return a.build();
  };
  k.programs[Mode::Base] = build(false);
  k.programs[Mode::Cim] = build(true);
  return k;
}

/// S[k] = sum over i of (A[k] + B[i]) for m outer elements (Type II). The
/// baseline keeps A[k] in a register; the CiM variants broadcast it to the
/// spare row and add in place, the vector variants a row chunk at a time.
inline KernelInstance build_saxpy_add(std::uint32_t n, std::uint64_t seed, const ArrayConfig& cfg,
                                      std::uint32_t m = 8) {
  detail::require_pow2_rows(cfg);
  KernelInstance k;
  k.name = "saxpy-add";
  k.plan = mapper::plan_type2(m, n, cfg, {{"S", m}});
  k.outputs = {"S"};
  k.scratch.push_back(detail::spare_window(cfg));
  detail::load(k, "A", detail::random_words(seed, 1, m));
  detail::load(k, "B", detail::random_words(seed, 2, n));
  const unsigned bank = detail::single_bank(k, "B");

  auto build = [&](Mode mode) {
    const unsigned lanes = mode == Mode::Vec4 ? 4 : mode == Mode::Vec8 ? 8 : 1;
    detail::Asm a;
    a.line("  ADDI r1, r0, {A}").line("  ADDI r3, r0, {S}").line("  ADDI r16, r0, {M}");
    if (mode != Mode::Base) a.line("  ADDI r21, r0, {WM}").line("  ADDI r22, r0, {SP}");
    a.line("  BEQ r16, r0, done");
    a.line("outer:").line("  LDW r10, 0(r1)");
    if (mode != Mode::Base) a.line("  SPWR r10, {MASK}");
    a.line("  ADDI r2, r0, {B}").line("  ADDI r8, r0, 0");
    if (lanes > 1) {
      a.line("  ADDI r7, r0, {NV}").line("  BEQ r7, r0, tail");
      a.line("vloop:").line("  AND r13, r2, r21").line("  ADD r6, r22, r13").line("  VCIM.ADD.SUM.{L} r2, r6, r12");
      a.line("  ADD r8, r8, r12").line("  ADDI r2, r2, {L}").line("  ADDI r7, r7, -1").line("  BNE r7, r0, vloop");
      a.line("tail:").line("  ADDI r7, r0, {NT}");
    } else {
      a.line("  ADDI r7, r0, {N}");
    }
    a.line("  BEQ r7, r0, store");
    a.line("inner:");
    if (mode == Mode::Base) {
      a.line("  LDW r11, 0(r2)").line("  ADD r12, r10, r11");
    } else {
      a.line("  AND r13, r2, r21").line("  ADD r6, r22, r13").line("  CIMADD r2, r6, r12");
    }
    a.line("  ADD r8, r8, r12").line("  ADDI r2, r2, 1").line("  ADDI r7, r7, -1").line("  BNE r7, r0, inner");
    a.line("store:").line("  STW r8, 0(r3)").line("  ADDI r1, r1, 1").line("  ADDI r3, r3, 1");
    a.line("  ADDI r16, r16, -1").line("  BNE r16, r0, outer");
    a.line("done:").line("  HALT");
    a.set("A", detail::base(k, "A")).set("B", detail::base(k, "B")).set("S", detail::base(k, "S")).set("M", m);
    a.set("N", n).set("NV", n / lanes).set("NT", n % lanes).set("L", lanes);
    a.set("WM", cfg.words_per_row - 1).set("SP", k.plan.layout().spare_address(bank, 0)).set("MASK", 1u << bank);
    return a.build();
  };
  k.programs[Mode::Base] = build(Mode::Base);
  k.programs[Mode::Cim] = build(Mode::Cim);
  if (cfg.vector_length >= 4) k.programs[Mode::Vec4] = build(Mode::Vec4);
  if (cfg.vector_length >= 8) k.programs[Mode::Vec8] = build(Mode::Vec8);
  return k;
}

struct KernelInfo {
  const char* name;
  const char* pattern;
  std::uint32_t default_size;
  std::function<KernelInstance(std::uint32_t, std::uint64_t, const ArrayConfig&)> build;
};

inline const std::vector<KernelInfo>& kernels() {
  static const std::vector<KernelInfo> list{
      {"xorcipher", "type1", 1024, build_xorcipher},
      {"vecsum", "type1", 1024, build_vecsum},
      {"blit", "type1", 1024, build_blit},
      {"strmatch", "type3", 1024, [](std::uint32_t n, std::uint64_t s, const ArrayConfig& c) {
         return build_strmatch(n, s, c);
       }},
      {"editdist", "type2", 48, build_editdist},
      {"saxpy-add", "type2", 256, [](std::uint32_t n, std::uint64_t s, const ArrayConfig& c) {
         return build_saxpy_add(n, s, c);
       }},
  };
  return list;
}

inline const KernelInfo& kernel_info(const std::string& name) {
  for (const auto& k : kernels()) {
    if (name == k.name) return k;
  }
  throw ConfigError("unknown kernel '" + name + "'");
}

inline KernelInstance build_kernel(const std::string& name, std::uint32_t size, std::uint64_t seed,
                                   const ArrayConfig& cfg) {
  return kernel_info(name).build(size, seed, cfg);
}

/// Dual execution on fresh arrays, ignoring the kernel's scratch rows.
inline xform::Equivalence verify_variant(const KernelInstance& k, Mode mode, const ArrayConfig& cfg) {
  xform::RunSetup setup;
  setup.config = cfg;
  setup.memory = k.inputs;
  setup.ignore = k.scratch;
  return xform::verify_equivalence(k.program(Mode::Base), k.program(mode), setup);
}

struct ExperimentOptions {
  ArrayConfig array{};
  energy::EnergyConfig energy{};
  double fault_probability = 0.0;  ///< per CiM access, one mis-sensed column
  bool replicate_as_special_write = false;
};

/// Statistics of one execution of one variant.
struct ModeRun {
  cpu::RunStats stats;
  std::array<std::uint64_t, energy::kOpKinds> op_counts{};
  std::array<double, 4> category_energy{};  ///< Read, Write, CiM, NMCorrections
  std::vector<Word> outputs;                ///< concatenated output arrays
  std::vector<Word> live_registers;
  bool operator==(const ModeRun&) const = default;
};

struct Report {
  std::string kernel;
  std::string mode;
  std::uint32_t size = 0;
  int memory_latency = 1;
  std::uint64_t seed = 0;
  double fault_probability = 0;
  ModeRun base;
  ModeRun run;
  double energy_ratio = 1.0;  ///< run energy / base energy
  double speedup = 1.0;       ///< base cycles / run cycles
  bool outputs_match = true;
  bool operator==(const Report&) const = default;
};

class OutputMismatch : public Error {
 public:
  using Error::Error;
};

inline ModeRun execute(const KernelInstance& k, Mode mode, const ExperimentOptions& opt, std::uint64_t seed) {
  const array::MemoryKind kind = mode == Mode::Base ? array::MemoryKind::SttMram : array::MemoryKind::SttCim;
  array::CimArray arr(opt.array, kind, opt.energy);
  arr.set_replicate_as_special_write(opt.replicate_as_special_write);
  for (const auto& [addr, w] : k.inputs) arr.write_word(addr, w);
  arr.ledger().reset();
  cpu::Machine m(arr);
  std::optional<array::FaultInjectingSensor> sensor;
  if (mode != Mode::Base && opt.fault_probability > 0) {
    sensor.emplace(opt.fault_probability, stream_key(seed, 0xFA17), array::FaultMode::PerAccess,
                   arr.code().code_bits());
    m.set_fault_sensor(&*sensor);
  }
  ModeRun r;
  r.stats = m.run(k.program(mode));
  if (r.stats.accesses() != arr.ledger().accesses()) throw Error("run statistics disagree with the energy ledger");
  for (std::size_t i = 0; i < energy::kOpKinds; ++i) r.op_counts[i] = arr.ledger().count(static_cast<energy::OpKind>(i));
  const energy::EnergyReport er = energy::report(arr.ledger());
  for (std::size_t c = 0; c < 4; ++c) r.category_energy[c] = er.categories[c].total();
  for (const auto& name : k.outputs) {
    const auto& p = k.plan.get(name);
    for (std::uint32_t i = 0; i < p.length; ++i) {
      const auto d = arr.peek(k.plan.address_of(name, i));
      if (!d.ok()) throw Error("uncorrectable output word");
      r.outputs.push_back(d.data);
    }
  }
  for (unsigned reg : k.program(Mode::Base).live) r.live_registers.push_back(m.reg(reg));
  return r;
}

/// Runs the baseline and `mode` on identical inputs. Throws OutputMismatch
/// if the two disagree; statistics are only reported for matching runs.
inline Report run_experiment(const std::string& kernel, Mode mode, std::uint32_t size, int memory_latency,
                             std::uint64_t seed, ExperimentOptions opt = {}) {
  opt.energy.memory_latency = memory_latency;
  opt.energy.validate();
  const KernelInstance k = build_kernel(kernel, size, seed, opt.array);
  Report rep;
  rep.kernel = kernel;
  rep.mode = to_string(mode);
  rep.size = size;
  rep.memory_latency = memory_latency;
  rep.seed = seed;
  rep.fault_probability = opt.fault_probability;
  rep.base = execute(k, Mode::Base, opt, seed);
  rep.run = mode == Mode::Base ? rep.base : execute(k, mode, opt, seed);
  rep.outputs_match = rep.base.outputs == rep.run.outputs && rep.base.live_registers == rep.run.live_registers;
  if (!rep.outputs_match) {
    throw OutputMismatch(kernel + " " + to_string(mode) + ": outputs differ from the baseline (seed " +
                         std::to_string(seed) + ")");
  }
  rep.energy_ratio = rep.base.stats.energy > 0 ? rep.run.stats.energy / rep.base.stats.energy : 1.0;
  rep.speedup = rep.run.stats.cycles > 0 ? static_cast<double>(rep.base.stats.cycles) /
                                               static_cast<double>(rep.run.stats.cycles)
                                         : 1.0;
  return rep;
}

inline const std::vector<int>& default_latencies() {
  static const std::vector<int> l{1, 2, 4, 8, 16};
  return l;
}

inline std::vector<Report> sweep_latency(const std::string& kernel, Mode mode, std::uint32_t size,
                                         const std::vector<int>& latencies, std::uint64_t seed,
                                         const ExperimentOptions& opt = {}) {
  std::vector<Report> out;
  for (int l : latencies) out.push_back(run_experiment(kernel, mode, size, l, seed, opt));
  return out;
}

// ---- serialization -------------------------------------------------------

inline void to_json(nlohmann::json& j, const ModeRun& r) {
  nlohmann::json ops = nlohmann::json::object(), cats = nlohmann::json::object();
  for (std::size_t i = 0; i < energy::kOpKinds; ++i) ops[energy::kOpKindNames[i]] = r.op_counts[i];
  for (std::size_t c = 0; c < 4; ++c) cats[energy::kCategoryNames[c]] = r.category_energy[c];
  j = {{"stats", r.stats}, {"op_counts", ops}, {"category_energy", cats}, {"outputs", r.outputs},
       {"live_registers", r.live_registers}};
}

inline void from_json(const nlohmann::json& j, ModeRun& r) {
  j.at("stats").get_to(r.stats);
  for (std::size_t i = 0; i < energy::kOpKinds; ++i) j.at("op_counts").at(energy::kOpKindNames[i]).get_to(r.op_counts[i]);
  for (std::size_t c = 0; c < 4; ++c) j.at("category_energy").at(energy::kCategoryNames[c]).get_to(r.category_energy[c]);
  j.at("outputs").get_to(r.outputs);
  j.at("live_registers").get_to(r.live_registers);
}

inline void to_json(nlohmann::json& j, const Report& r) {
  j = {{"kernel", r.kernel},       {"mode", r.mode},       {"size", r.size},
       {"memory_latency", r.memory_latency}, {"seed", r.seed}, {"fault_probability", r.fault_probability},
       {"base", r.base},           {"run", r.run},         {"energy_ratio", r.energy_ratio},
       {"speedup", r.speedup},     {"outputs_match", r.outputs_match}};
}

inline void from_json(const nlohmann::json& j, Report& r) {
  j.at("kernel").get_to(r.kernel);
  j.at("mode").get_to(r.mode);
  j.at("size").get_to(r.size);
  j.at("memory_latency").get_to(r.memory_latency);
  j.at("seed").get_to(r.seed);
  j.at("fault_probability").get_to(r.fault_probability);
  j.at("base").get_to(r.base);
  j.at("run").get_to(r.run);
  j.at("energy_ratio").get_to(r.energy_ratio);
  j.at("speedup").get_to(r.speedup);
  j.at("outputs_match").get_to(r.outputs_match);
}

inline void emit_json(std::ostream& out, const std::vector<Report>& reports) {
  out << nlohmann::json(reports).dump(2) << '\n';
}

inline std::vector<Report> parse_json(const std::string& text) {
  return nlohmann::json::parse(text).get<std::vector<Report>>();
}

inline constexpr const char* kCsvHeader =
    "kernel,mode,size,memory_latency,seed,fault_probability,instructions,writes,cnc_reads,cim_accesses,"
    "vcim_accesses,special_writes,nm_corrections,cycles,energy,base_cycles,base_energy,energy_ratio,speedup";

/// One row per report; an empty list gives the header alone.
inline void emit_csv(std::ostream& out, const std::vector<Report>& reports) {
  out << kCsvHeader << '\n';
  char buf[512];
  for (const auto& r : reports) {
    const auto& s = r.run.stats;
    std::snprintf(buf, sizeof buf,
                  "%s,%s,%u,%d,%llu,%.9g,%llu,%llu,%llu,%llu,%llu,%llu,%llu,%llu,%.9g,%llu,%.9g,%.9g,%.9g\n",
                  r.kernel.c_str(), r.mode.c_str(), r.size, r.memory_latency,
                  static_cast<unsigned long long>(r.seed), r.fault_probability,
                  static_cast<unsigned long long>(s.instructions), static_cast<unsigned long long>(s.writes),
                  static_cast<unsigned long long>(s.cnc_reads), static_cast<unsigned long long>(s.cim_accesses),
                  static_cast<unsigned long long>(s.vcim_accesses), static_cast<unsigned long long>(s.special_writes),
                  static_cast<unsigned long long>(s.nm_corrections), static_cast<unsigned long long>(s.cycles),
                  s.energy, static_cast<unsigned long long>(r.base.stats.cycles), r.base.stats.energy,
                  r.energy_ratio, r.speedup);
    out << buf;
  }
}

/// Stacked energy rows (Read, Write, CiM, NMCorrections) per report,
/// normalized to the same run's baseline total.
inline void emit_breakdown_csv(std::ostream& out, const std::vector<Report>& reports) {
  out << "kernel,mode,memory_latency,category,energy,normalized\n";
  char buf[256];
  for (const auto& r : reports) {
    const double base_total = r.base.stats.energy;
    for (std::size_t c = 0; c < 4; ++c) {
      const double e = r.run.category_energy[c];
      std::snprintf(buf, sizeof buf, "%s,%s,%d,%s,%.9g,%.9g\n", r.kernel.c_str(), r.mode.c_str(), r.memory_latency,
                    energy::kCategoryNames[c], e, base_total > 0 ? e / base_total : 0.0);
      out << buf;
    }
  }
}

}  // namespace sttcim::harness
