#pragma once

// A small word-addressed load/store machine with the CiM instruction
// extension. No pipeline or caches: each instruction costs one cycle plus
// memory_latency cycles per array access it makes.

#include <algorithm>
#include <array>
#include <cctype>
#include <cerrno>
#include <climits>
#include <cstdint>
#include <cstdlib>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "sttcim/array.hpp"
#include "sttcim/error_flow.hpp"

namespace sttcim::cpu {

enum class Opcode : std::uint8_t {
  Ldw, Stw, Add, Sub, And, Or, Xor, Not, Slt, Beq, Bne, Jmp, Addi, Lui, Halt,
  CimXor, CimAnd, CimOr, CimNand, CimNor, CimAdd, CimNot,
  Vcim, Spwr, Repl,
};

enum class Format { None, Load, Store, R3, R2, RI, Lui, Branch, Jump, Cim3, Cim2, Vcim, Spwr, Repl };

struct OpInfo {
  Opcode op;
  const char* name;
  Format format;
};

inline constexpr std::array<OpInfo, 25> kOps{{
    {Opcode::Ldw, "LDW", Format::Load},        {Opcode::Stw, "STW", Format::Store},
    {Opcode::Add, "ADD", Format::R3},          {Opcode::Sub, "SUB", Format::R3},
    {Opcode::And, "AND", Format::R3},          {Opcode::Or, "OR", Format::R3},
    {Opcode::Xor, "XOR", Format::R3},          {Opcode::Not, "NOT", Format::R2},
    {Opcode::Slt, "SLT", Format::R3},          {Opcode::Beq, "BEQ", Format::Branch},
    {Opcode::Bne, "BNE", Format::Branch},      {Opcode::Jmp, "JMP", Format::Jump},
    {Opcode::Addi, "ADDI", Format::RI},        {Opcode::Lui, "LUI", Format::Lui},
    {Opcode::Halt, "HALT", Format::None},      {Opcode::CimXor, "CIMXOR", Format::Cim3},
    {Opcode::CimAnd, "CIMAND", Format::Cim3},  {Opcode::CimOr, "CIMOR", Format::Cim3},
    {Opcode::CimNand, "CIMNAND", Format::Cim3}, {Opcode::CimNor, "CIMNOR", Format::Cim3},
    {Opcode::CimAdd, "CIMADD", Format::Cim3},  {Opcode::CimNot, "CIMNOT", Format::Cim2},
    {Opcode::Vcim, "VCIM", Format::Vcim},      {Opcode::Spwr, "SPWR", Format::Spwr},
    {Opcode::Repl, "REPL", Format::Repl},
}};

inline const OpInfo& info(Opcode op) { return kOps[static_cast<unsigned>(op)]; }

inline array::CimOp cim_op_of(Opcode op) {
  switch (op) {
    case Opcode::CimXor: return array::CimOp::Xor;
    case Opcode::CimAnd: return array::CimOp::And;
    case Opcode::CimOr: return array::CimOp::Or;
    case Opcode::CimNand: return array::CimOp::Nand;
    case Opcode::CimNor: return array::CimOp::Nor;
    case Opcode::CimAdd: return array::CimOp::Add;
    case Opcode::CimNot: return array::CimOp::Not;
    default: throw Error(std::string("not a CiM opcode: ") + info(op).name);
  }
}

inline bool is_cim(Opcode op) { return op >= Opcode::CimXor && op <= Opcode::CimNot; }

/// Field use per format:
///   Load   rd, imm(rs1)        Store  rs2, imm(rs1)
///   R3     rd, rs1, rs2        R2     rd, rs1         RI  rd, rs1, imm
///   Lui    rd, imm             Branch rs1, rs2, target Jump target
///   Cim3   rs1, rs2, rd        Cim2   rs1, rd
///   Vcim   rs1, rs2, rd (+ vop, reduce, lanes)
///   Spwr   rs2, imm (bank mask, 0 = all banks)
///   Repl   rs2, rs1 (value register, address register selecting the row)
struct Instruction {
  Opcode op = Opcode::Halt;
  std::uint8_t rd = 0, rs1 = 0, rs2 = 0;
  std::int32_t imm = 0;
  std::uint32_t target = 0;  ///< resolved instruction index for branches
  array::CimOp vop = array::CimOp::Add;
  array::ReduceKind reduce = array::ReduceKind::Summation;
  std::uint8_t lanes = 0;
  int line = 0;  ///< source line, diagnostics only

  bool operator==(const Instruction& o) const {
    return op == o.op && rd == o.rd && rs1 == o.rs1 && rs2 == o.rs2 && imm == o.imm && target == o.target &&
           vop == o.vop && reduce == o.reduce && lanes == o.lanes;
  }
};

/// `.ptr rN ARRAY idx`: rN holds the address of ARRAY[idx] wherever it is
/// used as a load base. Pointers sharing an `idx` symbol advance together.
struct PtrAnnotation {
  unsigned reg = 0;
  std::string array;
  std::string index;
  bool operator==(const PtrAnnotation&) const = default;
};

struct Program {
  std::vector<Instruction> code;
  std::map<std::string, std::uint32_t> labels;
  std::vector<PtrAnnotation> ptrs;
  std::set<unsigned> live;  ///< registers observable at exit (`.live`)

  const PtrAnnotation* ptr(unsigned reg) const {
    for (const auto& p : ptrs) {
      if (p.reg == reg) return &p;
    }
    return nullptr;
  }
  bool operator==(const Program&) const = default;
};

class AssemblyError : public Error {
 public:
  AssemblyError(int line, const std::string& msg) : Error("line " + std::to_string(line) + ": " + msg), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

namespace detail {

inline std::string upper(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string> split_operands(std::string_view s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',' || std::isspace(static_cast<unsigned char>(c))) {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

inline bool is_identifier(std::string_view s) {
  if (s.empty() || !(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_' || s[0] == '.')) return false;
  return std::all_of(s.begin(), s.end(),
                     [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.'; });
}

class LineParser {
 public:
  explicit LineParser(int line) : line_(line) {}

  [[noreturn]] void fail(const std::string& msg) const { throw AssemblyError(line_, msg); }

  std::uint8_t reg(const std::string& tok) const {
    const std::string u = upper(tok);
    if (u.size() >= 2 && u[0] == 'R') {
      char* end = nullptr;
      const long v = std::strtol(u.c_str() + 1, &end, 10);
      if (*end == '\0' && v >= 0 && v < 32 && std::isdigit(static_cast<unsigned char>(u[1]))) {
        return static_cast<std::uint8_t>(v);
      }
    }
    fail("expected register r0..r31, got '" + tok + "'");
  }

  std::int32_t imm(const std::string& tok) const {
    if (tok.empty()) fail("expected immediate");
    char* end = nullptr;
    errno = 0;
    const long long v = std::strtoll(tok.c_str(), &end, 0);
    if (*end != '\0' || errno != 0 || v < INT32_MIN || v > static_cast<long long>(UINT32_MAX)) {
      fail("bad immediate '" + tok + "'");
    }
    return static_cast<std::int32_t>(static_cast<std::uint32_t>(v));
  }

  /// `imm(rN)`
  void mem(const std::string& tok, std::int32_t& off, std::uint8_t& base) const {
    const auto lp = tok.find('('), rp = tok.rfind(')');
    if (lp == std::string::npos || rp != tok.size() - 1 || rp < lp) fail("expected imm(reg), got '" + tok + "'");
    const std::string o = tok.substr(0, lp);
    off = o.empty() ? 0 : imm(o);
    base = reg(tok.substr(lp + 1, rp - lp - 1));
  }

  void count(const std::vector<std::string>& ops, std::size_t n, const std::string& mnemonic) const {
    if (ops.size() != n) {
      fail(mnemonic + " expects " + std::to_string(n) + " operand" + (n == 1 ? "" : "s") + ", got " +
           std::to_string(ops.size()));
    }
  }

 private:
  int line_;
};

inline std::optional<array::CimOp> parse_vector_op(const std::string& s) {
  for (array::CimOp op : array::kAllOps) {
    if (s == array::to_string(op) && array::is_two_operand(op)) return op;
  }
  return std::nullopt;
}

}  // namespace detail

/// One instruction or directive per line; `;` or `#` start a comment;
/// `name:` defines a label (alone or before an instruction). Mnemonics and
/// registers are case-insensitive.
inline Program assemble(std::string_view text) {
  using detail::upper;
  Program prog;
  struct Fixup {
    std::size_t index;
    std::string label;
    int line;
  };
  std::vector<Fixup> fixups;
  std::istringstream in{std::string(text)};
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    detail::LineParser lp(lineno);
    if (auto c = raw.find_first_of(";#"); c != std::string::npos) raw.erase(c);
    std::string_view body = detail::trim(raw);
    while (true) {
      const auto colon = body.find(':');
      if (colon == std::string_view::npos) break;
      const std::string name{detail::trim(body.substr(0, colon))};
      if (!detail::is_identifier(name) || name[0] == '.') lp.fail("bad label '" + name + "'");
      if (!prog.labels.emplace(name, static_cast<std::uint32_t>(prog.code.size())).second) {
        lp.fail("duplicate label '" + name + "'");
      }
      body = detail::trim(body.substr(colon + 1));
    }
    if (body.empty()) continue;

    const auto sp = body.find_first_of(" \t");
    const std::string mnem = upper(body.substr(0, sp));
    const auto ops = detail::split_operands(sp == std::string_view::npos ? std::string_view{} : body.substr(sp));

    if (mnem == ".PTR") {
      lp.count(ops, 3, ".ptr");
      const unsigned r = lp.reg(ops[0]);
      if (prog.ptr(r)) lp.fail("register already annotated");
      if (!detail::is_identifier(ops[1])) lp.fail("bad array name '" + ops[1] + "'");
      prog.ptrs.push_back({r, ops[1], ops[2]});
      continue;
    }
    if (mnem == ".LIVE") {
      if (ops.empty()) lp.fail(".live needs at least one register");
      for (const auto& o : ops) prog.live.insert(lp.reg(o));
      continue;
    }

    Instruction ins;
    ins.line = lineno;
    std::string base = mnem;
    if (mnem.rfind("VCIM.", 0) == 0) {
      // VCIM.<op>.<SUM|ZCMP>.<lanes>
      const std::string rest = mnem.substr(5);
      const auto d1 = rest.find('.'), d2 = rest.rfind('.');
      if (d1 == std::string::npos || d1 == d2) lp.fail("expected VCIM.<op>.<SUM|ZCMP>.<lanes>");
      const auto vop = detail::parse_vector_op(rest.substr(0, d1));
      if (!vop) lp.fail("bad vector op in '" + mnem + "'");
      const std::string red = rest.substr(d1 + 1, d2 - d1 - 1), lanes = rest.substr(d2 + 1);
      if (red == "SUM") ins.reduce = array::ReduceKind::Summation;
      else if (red == "ZCMP") ins.reduce = array::ReduceKind::ZeroCompare;
      else lp.fail("bad reduce kind '" + red + "'");
      if (lanes != "4" && lanes != "8") lp.fail("lanes must be 4 or 8");
      ins.vop = *vop;
      ins.lanes = static_cast<std::uint8_t>(lanes[0] - '0');
      base = "VCIM";
    }
    const auto it = std::find_if(kOps.begin(), kOps.end(), [&](const OpInfo& i) { return base == i.name; });
    if (it == kOps.end() || (base == "VCIM" && mnem == "VCIM")) lp.fail("unknown opcode '" + mnem + "'");
    ins.op = it->op;
    switch (it->format) {
      case Format::None: lp.count(ops, 0, mnem); break;
      case Format::Load:
        lp.count(ops, 2, mnem);
        ins.rd = lp.reg(ops[0]);
        lp.mem(ops[1], ins.imm, ins.rs1);
        break;
      case Format::Store:
        lp.count(ops, 2, mnem);
        ins.rs2 = lp.reg(ops[0]);
        lp.mem(ops[1], ins.imm, ins.rs1);
        break;
      case Format::R3:
        lp.count(ops, 3, mnem);
        ins.rd = lp.reg(ops[0]);
        ins.rs1 = lp.reg(ops[1]);
        ins.rs2 = lp.reg(ops[2]);
        break;
      case Format::R2:
        lp.count(ops, 2, mnem);
        ins.rd = lp.reg(ops[0]);
        ins.rs1 = lp.reg(ops[1]);
        break;
      case Format::RI:
        lp.count(ops, 3, mnem);
        ins.rd = lp.reg(ops[0]);
        ins.rs1 = lp.reg(ops[1]);
        ins.imm = lp.imm(ops[2]);
        break;
      case Format::Lui:
        lp.count(ops, 2, mnem);
        ins.rd = lp.reg(ops[0]);
        ins.imm = lp.imm(ops[1]);
        if (ins.imm < 0 || ins.imm > 0xFFFF) lp.fail("LUI immediate must fit 16 bits");
        break;
      case Format::Branch:
        lp.count(ops, 3, mnem);
        ins.rs1 = lp.reg(ops[0]);
        ins.rs2 = lp.reg(ops[1]);
        fixups.push_back({prog.code.size(), ops[2], lineno});
        break;
      case Format::Jump:
        lp.count(ops, 1, mnem);
        fixups.push_back({prog.code.size(), ops[0], lineno});
        break;
      case Format::Cim3:
      case Format::Vcim:
        lp.count(ops, 3, mnem);
        ins.rs1 = lp.reg(ops[0]);
        ins.rs2 = lp.reg(ops[1]);
        ins.rd = lp.reg(ops[2]);
        break;
      case Format::Cim2:
        lp.count(ops, 2, mnem);
        ins.rs1 = lp.reg(ops[0]);
        ins.rd = lp.reg(ops[1]);
        break;
      case Format::Spwr:
        lp.count(ops, 2, mnem);
        ins.rs2 = lp.reg(ops[0]);
        ins.imm = lp.imm(ops[1]);
        if (ins.imm < 0) lp.fail("bank mask must be non-negative");
        break;
      case Format::Repl:
        lp.count(ops, 2, mnem);
        ins.rs2 = lp.reg(ops[0]);
        ins.rs1 = lp.reg(ops[1]);
        break;
    }
    prog.code.push_back(ins);
  }
  for (const auto& f : fixups) {
    const auto it = prog.labels.find(f.label);
    if (it == prog.labels.end()) throw AssemblyError(f.line, "undefined label '" + f.label + "'");
    prog.code[f.index].target = it->second;
  }
  return prog;
}

inline std::string format_instruction(const Instruction& ins, const std::string& target_label = {}) {
  const OpInfo& oi = info(ins.op);
  auto r = [](unsigned n) { return "r" + std::to_string(n); };
  const std::string tgt = target_label.empty() ? ("@" + std::to_string(ins.target)) : target_label;
  std::string s = oi.name;
  switch (oi.format) {
    case Format::None: break;
    case Format::Load: s += " " + r(ins.rd) + ", " + std::to_string(ins.imm) + "(" + r(ins.rs1) + ")"; break;
    case Format::Store: s += " " + r(ins.rs2) + ", " + std::to_string(ins.imm) + "(" + r(ins.rs1) + ")"; break;
    case Format::R3: s += " " + r(ins.rd) + ", " + r(ins.rs1) + ", " + r(ins.rs2); break;
    case Format::R2: s += " " + r(ins.rd) + ", " + r(ins.rs1); break;
    case Format::RI: s += " " + r(ins.rd) + ", " + r(ins.rs1) + ", " + std::to_string(ins.imm); break;
    case Format::Lui: s += " " + r(ins.rd) + ", " + std::to_string(ins.imm); break;
    case Format::Branch: s += " " + r(ins.rs1) + ", " + r(ins.rs2) + ", " + tgt; break;
    case Format::Jump: s += " " + tgt; break;
    case Format::Cim3: s += " " + r(ins.rs1) + ", " + r(ins.rs2) + ", " + r(ins.rd); break;
    case Format::Cim2: s += " " + r(ins.rs1) + ", " + r(ins.rd); break;
    case Format::Vcim:
      s = std::string("VCIM.") + array::to_string(ins.vop) + "." + array::to_string(ins.reduce) + "." +
          std::to_string(ins.lanes) + " " + r(ins.rs1) + ", " + r(ins.rs2) + ", " + r(ins.rd);
      break;
    case Format::Spwr: s += " " + r(ins.rs2) + ", " + std::to_string(ins.imm); break;
    case Format::Repl: s += " " + r(ins.rs2) + ", " + r(ins.rs1); break;
  }
  return s;
}

/// Canonical text; `assemble(disassemble(p)) == p`. Branch targets without
/// a label get a synthetic `L<index>` label.
inline std::string disassemble(const Program& p) {
  std::map<std::uint32_t, std::vector<std::string>> by_index;
  for (const auto& [name, idx] : p.labels) by_index[idx].push_back(name);
  for (const auto& ins : p.code) {
    const Format f = info(ins.op).format;
    if ((f == Format::Branch || f == Format::Jump) && !by_index.count(ins.target)) {
      by_index[ins.target].push_back("L" + std::to_string(ins.target));
    }
  }
  std::ostringstream out;
  for (const auto& a : p.ptrs) out << ".ptr r" << a.reg << ' ' << a.array << ' ' << a.index << '\n';
  if (!p.live.empty()) {
    out << ".live";
    bool first = true;
    for (unsigned r : p.live) {
      out << (first ? " r" : ", r") << r;
      first = false;
    }
    out << '\n';
  }
  for (std::uint32_t i = 0; i <= p.code.size(); ++i) {
    if (auto it = by_index.find(i); it != by_index.end()) {
      for (const auto& name : it->second) out << name << ":\n";
    }
    if (i == p.code.size()) break;
    const auto& ins = p.code[i];
    out << "  " << format_instruction(ins, by_index.count(ins.target) ? by_index[ins.target].front() : "") << '\n';
  }
  return out.str();
}

/// What the processor drives onto the bus for one memory operation. For
/// CiM requests the second address rides the write-data channel.
struct BusTransaction {
  enum class Kind : std::uint8_t { Read, Write, Cim, Vcim, SpareWrite, Replicate };
  Kind kind = Kind::Read;
  Address addr_a = 0;
  Address addr_b = 0;     ///< CiM second operand, or write data
  std::uint8_t cim_type = 0;  ///< 3-bit CiMType
  std::uint8_t reduce = 0;    ///< 2-bit reduce kind (vector only)
  std::uint8_t lanes = 0;

  /// Control-side sideband: cim_type in bits [0,3), reduce in [3,5),
  /// lanes-1 in [5,8).
  std::uint8_t control_bits() const {
    return static_cast<std::uint8_t>((cim_type & 7u) | ((reduce & 3u) << 3) |
                                     ((lanes ? lanes - 1u : 0u) & 7u) << 5);
  }
  bool operator==(const BusTransaction&) const = default;
};

/// Memory-side accounting of one run. `accesses()` reconciles with the
/// array's energy ledger.
struct RunStats {
  std::uint64_t instructions = 0;
  std::uint64_t writes = 0;          ///< STW, plus per-slot replication writes
  std::uint64_t cnc_reads = 0;       ///< LDW, i.e. reads not executed in-memory
  std::uint64_t cim_accesses = 0;    ///< scalar CiM instructions (CC-reads executed as CiM)
  std::uint64_t vcim_accesses = 0;
  std::uint64_t special_writes = 0;  ///< spare-row broadcasts (per bank) and single-shot replications
  std::uint64_t nm_corrections = 0;  ///< near-memory fallbacks, two accesses each
  std::uint64_t cycles = 0;
  double energy = 0;

  std::uint64_t accesses() const {
    return writes + cnc_reads + cim_accesses + vcim_accesses + special_writes + 2 * nm_corrections;
  }
  bool operator==(const RunStats&) const = default;
};

class Trap : public Error {
 public:
  Trap(std::uint32_t pc, const std::string& msg) : Error("trap at pc " + std::to_string(pc) + ": " + msg), pc_(pc) {}
  std::uint32_t pc() const { return pc_; }

 private:
  std::uint32_t pc_;
};

/// Interpreter bound to one scratchpad. Optionally senses CiM accesses
/// through a fault-injecting sensor so the correction flow is exercised.
class Machine {
 public:
  explicit Machine(array::CimArray& mem) : mem_(mem) {}

  void set_fault_sensor(array::FaultInjectingSensor* s) { sensor_ = s; }
  void set_step_limit(std::uint64_t n) { step_limit_ = n; }
  void set_trace(bool on) { trace_on_ = on; }

  std::array<Word, 32>& regs() { return regs_; }
  const std::array<Word, 32>& regs() const { return regs_; }
  Word reg(unsigned r) const { return r == 0 ? 0 : regs_[r]; }
  void set_reg(unsigned r, Word v) {
    if (r != 0) regs_[r] = v;
  }
  std::uint32_t pc() const { return pc_; }
  const std::vector<BusTransaction>& trace() const { return trace_; }
  array::CimArray& memory() { return mem_; }

  /// Runs from instruction 0 until HALT or the end of the program.
  RunStats run(const Program& p) {
    pc_ = 0;
    stats_ = {};
    const double e0 = mem_.ledger().total_energy();
    while (pc_ < p.code.size()) {
      if (stats_.instructions >= step_limit_) throw Trap(pc_, "step limit exceeded");
      if (!step(p.code[pc_])) break;
    }
    stats_.energy = mem_.ledger().total_energy() - e0;
    return stats_;
  }

 private:
  /// Executes one instruction; false on HALT.
  bool step(const Instruction& ins) {
    using array::CimOp;
    ++stats_.instructions;
    const std::uint64_t acc0 = stats_.accesses();
    std::uint32_t next = pc_ + 1;
    const Word a = reg(ins.rs1), b = reg(ins.rs2);
    bool running = true;
    try {
      switch (ins.op) {
        case Opcode::Ldw: {
          const Address addr = a + static_cast<Word>(ins.imm);
          record({BusTransaction::Kind::Read, addr, 0, 0, 0, 0});
          const ecc::DecodeOutcome d = mem_.read_word(addr);
          ++stats_.cnc_reads;
          if (!d.ok()) throw Trap(pc_, "uncorrectable read");
          set_reg(ins.rd, d.data);
          break;
        }
        case Opcode::Stw: {
          const Address addr = a + static_cast<Word>(ins.imm);
          record({BusTransaction::Kind::Write, addr, b, 0, 0, 0});
          mem_.write_word(addr, b);
          ++stats_.writes;
          break;
        }
        case Opcode::Add: set_reg(ins.rd, a + b); break;
        case Opcode::Sub: set_reg(ins.rd, a - b); break;
        case Opcode::And: set_reg(ins.rd, a & b); break;
        case Opcode::Or: set_reg(ins.rd, a | b); break;
        case Opcode::Xor: set_reg(ins.rd, a ^ b); break;
        case Opcode::Not: set_reg(ins.rd, ~a); break;
        case Opcode::Slt:
          set_reg(ins.rd, static_cast<std::int32_t>(a) < static_cast<std::int32_t>(b) ? 1u : 0u);
          break;
        case Opcode::Addi: set_reg(ins.rd, a + static_cast<Word>(ins.imm)); break;
        case Opcode::Lui: set_reg(ins.rd, static_cast<Word>(ins.imm) << 16); break;
        case Opcode::Beq:
          if (a == b) next = ins.target;
          break;
        case Opcode::Bne:
          if (a != b) next = ins.target;
          break;
        case Opcode::Jmp: next = ins.target; break;
        case Opcode::Halt: running = false; break;
        case Opcode::CimXor:
        case Opcode::CimAnd:
        case Opcode::CimOr:
        case Opcode::CimNand:
        case Opcode::CimNor:
        case Opcode::CimAdd:
        case Opcode::CimNot: {
          const CimOp op = cim_op_of(ins.op);
          const Address addr_b = op == CimOp::Not ? a : b;
          record({BusTransaction::Kind::Cim, a, addr_b, static_cast<std::uint8_t>(array::encode(op)), 0, 0});
          const ecc::FlowResult f =
              sensor_ ? ecc::cim_error_flow(mem_, a, addr_b, op, *sensor_) : ecc::cim_error_flow(mem_, a, addr_b, op);
          ++stats_.cim_accesses;
          if (f.hard_error()) throw Trap(pc_, "uncorrectable CiM error");
          if (f.near_memory) ++stats_.nm_corrections;
          set_reg(ins.rd, f.result.value);
          break;
        }
        case Opcode::Vcim: {
          record({BusTransaction::Kind::Vcim, a, b, static_cast<std::uint8_t>(array::encode(ins.vop)),
                  static_cast<std::uint8_t>(ins.reduce), ins.lanes});
          const ecc::VcimFlowResult f = sensor_
                                            ? ecc::vcim_error_flow(mem_, a, b, ins.vop, ins.reduce, ins.lanes, *sensor_)
                                            : ecc::vcim_error_flow(mem_, a, b, ins.vop, ins.reduce, ins.lanes);
          ++stats_.vcim_accesses;
          if (f.hard_error) throw Trap(pc_, "uncorrectable vector CiM error");
          stats_.nm_corrections += f.near_memory_lanes;
          set_reg(ins.rd, static_cast<Word>(f.value));
          break;
        }
        case Opcode::Spwr: {
          std::vector<unsigned> banks;
          const unsigned nb = mem_.config().banks;
          const auto mask = static_cast<std::uint32_t>(ins.imm);
          if (nb < 32 && (mask >> nb) != 0) throw Trap(pc_, "bank mask names a missing bank");
          for (unsigned k = 0; k < nb; ++k) {
            if (mask == 0 || ((mask >> k) & 1u)) banks.push_back(k);
          }
          record({BusTransaction::Kind::SpareWrite, static_cast<Address>(mask), b, 0, 0, 0});
          mem_.broadcast_spare_write(banks, b);
          stats_.special_writes += banks.size();
          break;
        }
        case Opcode::Repl: {
          const Location l = mem_.layout().locate(a);
          record({BusTransaction::Kind::Replicate, a, b, 0, 0, 0});
          mem_.column_replicate_write(l.bank, l.row, b);
          if (mem_.replicate_as_special_write()) ++stats_.special_writes;
          else stats_.writes += mem_.config().words_per_row;
          break;
        }
      }
    } catch (const Trap&) {
      throw;
    } catch (const Error& e) {
      throw Trap(pc_, e.what());
    }
    stats_.cycles += 1 + (stats_.accesses() - acc0) * static_cast<std::uint64_t>(mem_.ledger().config().memory_latency);
    pc_ = next;
    return running;
  }

  void record(const BusTransaction& t) {
    if (trace_on_) trace_.push_back(t);
  }

  array::CimArray& mem_;
  array::FaultInjectingSensor* sensor_ = nullptr;
  std::array<Word, 32> regs_{};
  std::uint32_t pc_ = 0;
  RunStats stats_;
  std::uint64_t step_limit_ = 200'000'000;
  bool trace_on_ = false;
  std::vector<BusTransaction> trace_;
};

}  // namespace sttcim::cpu
