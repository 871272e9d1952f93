#pragma once

// Peephole rewriting of load/load/op windows into CiM instructions. A window
// is rewritten only when the loaded registers are dead afterwards and the
// mapping plan proves the two addresses aligned for every index the loop can
// reach.

#include <array>
#include <bit>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sttcim/array.hpp"
#include "sttcim/cpu.hpp"
#include "sttcim/mapper.hpp"

namespace sttcim::xform {

using cpu::Instruction;
using cpu::Opcode;
using cpu::Program;

using RegSet = std::uint32_t;

inline RegSet bit(unsigned r) { return r == 0 ? 0u : (1u << r); }

/// Registers read and written by one instruction.
inline std::pair<RegSet, RegSet> uses_defs(const Instruction& i) {
  switch (cpu::info(i.op).format) {
    case cpu::Format::None:
    case cpu::Format::Jump: return {0, 0};
    case cpu::Format::Load: return {bit(i.rs1), bit(i.rd)};
    case cpu::Format::Store: return {bit(i.rs1) | bit(i.rs2), 0};
    case cpu::Format::R3: return {bit(i.rs1) | bit(i.rs2), bit(i.rd)};
    case cpu::Format::R2:
    case cpu::Format::RI: return {bit(i.rs1), bit(i.rd)};
    case cpu::Format::Lui: return {0, bit(i.rd)};
    case cpu::Format::Branch: return {bit(i.rs1) | bit(i.rs2), 0};
    case cpu::Format::Cim3:
    case cpu::Format::Vcim: return {bit(i.rs1) | bit(i.rs2), bit(i.rd)};
    case cpu::Format::Cim2: return {bit(i.rs1), bit(i.rd)};
    case cpu::Format::Spwr: return {bit(i.rs2), 0};
    case cpu::Format::Repl: return {bit(i.rs1) | bit(i.rs2), 0};
  }
  return {0, 0};
}

inline std::vector<std::uint32_t> successors(const Program& p, std::uint32_t idx) {
  const Instruction& i = p.code[idx];
  switch (i.op) {
    case Opcode::Halt: return {};
    case Opcode::Jmp: return {i.target};
    case Opcode::Beq:
    case Opcode::Bne: return {idx + 1, i.target};
    default: return {idx + 1};
  }
}

/// live_out[i]: registers that may be read after instruction i executes.
/// Leaving the program (HALT or falling off the end) reads `.live`.
inline std::vector<RegSet> live_out(const Program& p) {
  RegSet exit_live = 0;
  for (unsigned r : p.live) exit_live |= bit(r);
  const std::size_t n = p.code.size();
  std::vector<RegSet> in(n + 1, 0), out(n, 0);
  in[n] = exit_live;
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t k = n; k-- > 0;) {
      const auto idx = static_cast<std::uint32_t>(k);
      RegSet o = p.code[k].op == Opcode::Halt ? exit_live : 0;
      for (std::uint32_t s : successors(p, idx)) o |= in[std::min<std::size_t>(s, n)];
      const auto [use, def] = uses_defs(p.code[k]);
      const RegSet i = use | (o & ~def);
      if (o != out[k] || i != in[k]) {
        out[k] = o;
        in[k] = i;
        changed = true;
      }
    }
  }
  return out;
}

struct ReportEntry {
  int line = 0;                ///< source line of the window's first instruction
  std::uint32_t index = 0;     ///< instruction index in the input program
  std::string rule;            ///< e.g. "LDW-LDW-XOR"
  bool applied = false;
  std::string reason;          ///< why a candidate was skipped
  bool operator==(const ReportEntry&) const = default;
};

struct Result {
  Program program;
  std::vector<ReportEntry> report;
  unsigned applied() const {
    unsigned n = 0;
    for (const auto& e : report) n += e.applied;
    return n;
  }
};

inline std::optional<Opcode> cim_for(Opcode op) {
  switch (op) {
    case Opcode::Xor: return Opcode::CimXor;
    case Opcode::And: return Opcode::CimAnd;
    case Opcode::Or: return Opcode::CimOr;
    case Opcode::Add: return Opcode::CimAdd;
    default: return std::nullopt;
  }
}

namespace detail {

inline std::optional<std::int64_t> numeric(const std::string& s) {
  char* end = nullptr;
  const long long v = std::strtoll(s.c_str(), &end, 0);
  if (s.empty() || *end != '\0') return std::nullopt;
  return v;
}

/// Reason the pointer registers ra, rb cannot be proven aligned, or empty.
inline std::string prove_aligned(const Program& p, const mapper::MappingPlan& plan, unsigned ra, unsigned rb) {
  const cpu::PtrAnnotation* pa = p.ptr(ra);
  const cpu::PtrAnnotation* pb = p.ptr(rb);
  if (!pa || !pb) return "address not statically known";
  const mapper::Placement* A = plan.find(pa->array);
  const mapper::Placement* B = plan.find(pb->array);
  if (!A || !B) return "array not in plan";
  const auto layout = plan.layout();
  const auto na = numeric(pa->index), nb = numeric(pb->index);
  if (na && nb) {
    if (*na < 0 || *nb < 0 || *na >= A->length || *nb >= B->length) return "index outside array";
    return mapper::alignment_ok(plan.address_of(A->name, static_cast<std::uint32_t>(*na)),
                                plan.address_of(B->name, static_cast<std::uint32_t>(*nb)), layout)
               ? ""
               : "operands not aligned under plan";
  }
  if (na || nb || pa->index != pb->index) return "index relation unknown";
  const std::uint32_t len = std::min(A->length, B->length);
  if (len == 0) return "empty array";
  for (std::uint32_t i = 0; i < len; ++i) {
    if (!mapper::alignment_ok(plan.address_of(A->name, i), plan.address_of(B->name, i), layout)) {
      return "operands not aligned under plan";
    }
  }
  return "";
}

inline std::string prove_valid(const Program& p, const mapper::MappingPlan& plan, unsigned ra) {
  const cpu::PtrAnnotation* pa = p.ptr(ra);
  if (!pa) return "address not statically known";
  if (!plan.find(pa->array)) return "array not in plan";
  return "";
}

}  // namespace detail

/// Rewrites every eligible window; everything else passes through unchanged.
inline Result transform(const Program& in, const mapper::MappingPlan& plan) {
  Result res;
  const std::vector<RegSet> live = live_out(in);
  std::vector<bool> is_target(in.code.size() + 1, false);
  for (const auto& [name, idx] : in.labels) is_target[idx] = true;
  for (const auto& ins : in.code) {
    const auto f = cpu::info(ins.op).format;
    if (f == cpu::Format::Branch || f == cpu::Format::Jump) is_target[ins.target] = true;
  }

  std::vector<std::uint32_t> remap(in.code.size() + 1, 0);
  Program& outp = res.program;
  std::size_t i = 0;
  while (i < in.code.size()) {
    remap[i] = static_cast<std::uint32_t>(outp.code.size());
    const Instruction& l1 = in.code[i];
    bool done = false;
    if (l1.op == Opcode::Ldw && i + 1 < in.code.size()) {
      const Instruction& n1 = in.code[i + 1];
      // LDW rX, 0(rA); LDW rY, 0(rB); OP rZ, rX, rY
      if (n1.op == Opcode::Ldw && i + 2 < in.code.size()) {
        const Instruction& op = in.code[i + 2];
        const auto cim = cim_for(op.op);
        const unsigned rx = l1.rd, ry = n1.rd;
        if (cim && ((op.rs1 == rx && op.rs2 == ry) || (op.rs1 == ry && op.rs2 == rx))) {
          const std::string rule = std::string("LDW-LDW-") + cpu::info(op.op).name;
          std::string why;
          if (l1.imm != 0 || n1.imm != 0) why = "nonzero offset";
          else if (rx == 0 || ry == 0) why = "load into r0";
          else if (rx == ry) why = "loads share a destination";
          else if (rx == n1.rs1) why = "first load clobbers second address";
          else if (is_target[i + 1] || is_target[i + 2]) why = "branch target inside window";
          else if ((live[i + 2] & (bit(rx) | bit(ry)) & ~bit(op.rd)) != 0) why = "loaded register live after window";
          else why = detail::prove_aligned(in, plan, l1.rs1, n1.rs1);
          res.report.push_back({l1.line, static_cast<std::uint32_t>(i), rule, why.empty(), why});
          if (why.empty()) {
            Instruction c;
            c.op = *cim;
            c.rs1 = l1.rs1;
            c.rs2 = n1.rs1;
            c.rd = op.rd;
            c.line = l1.line;
            outp.code.push_back(c);
            remap[i + 1] = remap[i + 2] = remap[i];
            i += 3;
            done = true;
          }
        }
      } else if (n1.op == Opcode::Not && n1.rs1 == l1.rd) {
        // LDW rX, 0(rA); NOT rZ, rX
        std::string why;
        if (l1.imm != 0) why = "nonzero offset";
        else if (l1.rd == 0) why = "load into r0";
        else if (is_target[i + 1]) why = "branch target inside window";
        else if ((live[i + 1] & bit(l1.rd) & ~bit(n1.rd)) != 0) why = "loaded register live after window";
        else why = detail::prove_valid(in, plan, l1.rs1);
        res.report.push_back({l1.line, static_cast<std::uint32_t>(i), "LDW-NOT", why.empty(), why});
        if (why.empty()) {
          Instruction c;
          c.op = Opcode::CimNot;
          c.rs1 = l1.rs1;
          c.rd = n1.rd;
          c.line = l1.line;
          outp.code.push_back(c);
          remap[i + 1] = remap[i];
          i += 2;
          done = true;
        }
      }
    }
    if (!done) {
      outp.code.push_back(l1);
      ++i;
    }
  }
  remap[in.code.size()] = static_cast<std::uint32_t>(outp.code.size());
  for (auto& ins : outp.code) {
    const auto f = cpu::info(ins.op).format;
    if (f == cpu::Format::Branch || f == cpu::Format::Jump) ins.target = remap[ins.target];
  }
  for (const auto& [name, idx] : in.labels) outp.labels[name] = remap[idx];
  outp.ptrs = in.ptrs;
  outp.live = in.live;
  return res;
}

inline std::string format_report(const std::vector<ReportEntry>& report) {
  std::string out = "line,index,rule,status,reason\n";
  for (const auto& e : report) {
    out += std::to_string(e.line) + "," + std::to_string(e.index) + "," + e.rule + "," +
           (e.applied ? "applied" : "skipped") + "," + e.reason + "\n";
  }
  return out;
}

using MemoryImage = std::vector<std::pair<Address, Word>>;

struct Equivalence {
  bool equal = false;
  std::string diagnostic;
  explicit operator bool() const { return equal; }
};

struct RunSetup {
  ArrayConfig config{};
  MemoryImage memory;
  std::array<Word, 32> registers{};
  bool replicate_as_special_write = false;
  /// Address ranges [first, second) excluded from the memory comparison
  /// (scratch such as spare or replica rows written by only one variant).
  std::vector<std::pair<Address, Address>> ignore;
};

/// Both programs on fresh STT-CiM arrays with identical initial state; equal
/// iff the final memory (including spare rows, minus `ignore`) and the
/// `.live` registers of the original match.
inline Equivalence verify_equivalence(const Program& original, const Program& transformed, const RunSetup& setup) {
  auto run = [&](const Program& p, array::CimArray& arr, cpu::Machine& m) -> std::string {
    arr.set_replicate_as_special_write(setup.replicate_as_special_write);
    for (const auto& [addr, w] : setup.memory) arr.write_word(addr, w);
    for (unsigned r = 1; r < 32; ++r) m.set_reg(r, setup.registers[r]);
    try {
      m.run(p);
    } catch (const Error& e) {
      return e.what();
    }
    return "";
  };
  array::CimArray a(setup.config, array::MemoryKind::SttCim), b(setup.config, array::MemoryKind::SttCim);
  cpu::Machine ma(a), mb(b);
  const std::string ea = run(original, a, ma), eb = run(transformed, b, mb);
  if (!ea.empty() || !eb.empty()) {
    if (ea == eb) return {true, ""};
    return {false, "original: " + (ea.empty() ? std::string("ok") : ea) +
                       "; transformed: " + (eb.empty() ? std::string("ok") : eb)};
  }
  const AddressLayout& layout = a.layout();
  auto ignored = [&](Address addr) {
    for (const auto& [lo, hi] : setup.ignore) {
      if (addr >= lo && addr < hi) return true;
    }
    return false;
  };
  for (Address addr = 0; addr < layout.end(); ++addr) {
    if (a.raw(addr) != b.raw(addr) && !ignored(addr)) {
      return {false, "memory differs at " + std::to_string(addr) + ": " + std::to_string(a.peek(addr).data) +
                         " vs " + std::to_string(b.peek(addr).data)};
    }
  }
  for (unsigned r : original.live) {
    if (ma.reg(r) != mb.reg(r)) {
      return {false, "r" + std::to_string(r) + " differs: " + std::to_string(ma.reg(r)) + " vs " +
                         std::to_string(mb.reg(r))};
    }
  }
  return {true, ""};
}

}  // namespace sttcim::xform
