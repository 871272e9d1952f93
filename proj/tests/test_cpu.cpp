#include <gtest/gtest.h>

#include "sttcim/cpu.hpp"

using namespace sttcim;
using namespace sttcim::cpu;

namespace {

ArrayConfig cfg() {
  ArrayConfig c;
  c.banks = 2;
  c.rows_per_bank = 17;
  c.words_per_row = 8;
  return c;
}

}  // namespace

TEST(Cpu, AssemblesEveryFormat) {
  const auto p = assemble(R"(
    ; comment
    .ptr r1 A i
    .live r8, r9
    start: ldw r5, 4(r1)   # lower case is fine
    STW r5, -1(r2)
    ADD r3, r4, r5
    NOT r6, r7
    ADDI r1, r1, -3
    LUI r2, 0x12
    BEQ r1, r0, start
    JMP end
    CIMXOR r1, r2, r3
    CIMNOT r1, r4
    VCIM.ADD.SUM.8 r1, r2, r3
    VCIM.XOR.ZCMP.4 r1, r2, r3
    SPWR r5, 3
    REPL r5, r1
    end: HALT
  )");
  ASSERT_EQ(p.code.size(), 15u);
  EXPECT_EQ(p.code[0].op, Opcode::Ldw);
  EXPECT_EQ(p.code[0].imm, 4);
  EXPECT_EQ(p.code[1].imm, -1);
  EXPECT_EQ(p.code[5].imm, 0x12);
  EXPECT_EQ(p.code[6].target, 0u);
  EXPECT_EQ(p.code[7].target, 14u);
  EXPECT_EQ(p.code[10].lanes, 8);
  EXPECT_EQ(p.code[11].reduce, array::ReduceKind::ZeroCompare);
  EXPECT_EQ(p.code[11].vop, array::CimOp::Xor);
  EXPECT_EQ(p.labels.at("end"), 14u);
  EXPECT_EQ(p.live, (std::set<unsigned>{8, 9}));
  ASSERT_NE(p.ptr(1), nullptr);
  EXPECT_EQ(p.ptr(1)->array, "A");
}

TEST(Cpu, DisassemblyRoundTrips) {
  const auto p = assemble("loop: LDW r1, 0(r2)\nCIMADD r1, r2, r3\nBNE r1, r0, loop\nVCIM.OR.SUM.4 r1, r2, r3\nHALT\n");
  EXPECT_EQ(assemble(disassemble(p)), p);
}

TEST(Cpu, AssemblyErrorsNameTheLine) {
  try {
    assemble("ADD r1, r2, r3\nFOO r1\n");
    FAIL();
  } catch (const AssemblyError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("unknown opcode"), std::string::npos);
  }
  EXPECT_THROW(assemble("ADD r1, r2\n"), AssemblyError);
  EXPECT_THROW(assemble("ADD r1, r2, r32\n"), AssemblyError);
  EXPECT_THROW(assemble("JMP nowhere\n"), AssemblyError);
  EXPECT_THROW(assemble("a: HALT\na: HALT\n"), AssemblyError);
  EXPECT_THROW(assemble("VCIM.ADD.SUM.2 r1, r2, r3\n"), AssemblyError);
}

TEST(Cpu, ArithmeticAndBranches) {
  // Sum 1..10 in r2; r0 stays zero.
  const auto p = assemble(R"(
      ADDI r1, r0, 10
      ADDI r0, r0, 5
    loop:
      ADD r2, r2, r1
      ADDI r1, r1, -1
      BNE r1, r0, loop
      SUB r3, r0, r2
      SLT r4, r3, r0
      LUI r5, 1
      HALT
  )");
  array::CimArray mem(cfg(), array::MemoryKind::SttCim);
  Machine m(mem);
  const auto s = m.run(p);
  EXPECT_EQ(m.reg(2), 55u);
  EXPECT_EQ(m.reg(0), 0u);
  EXPECT_EQ(m.reg(3), static_cast<Word>(-55));
  EXPECT_EQ(m.reg(4), 1u);
  EXPECT_EQ(m.reg(5), 0x10000u);
  EXPECT_EQ(s.accesses(), 0u);
  EXPECT_EQ(s.instructions, 2u + 30u + 4u);
  EXPECT_EQ(s.cycles, s.instructions);
}

TEST(Cpu, CimInstructionIsOneAccess) {
  const auto p = assemble(R"(
      ADDI r1, r0, 0
      ADDI r2, r0, 8
      CIMXOR r1, r2, r3
      CIMADD r1, r2, r4
      CIMNOT r1, r5
      HALT
  )");
  for (int latency : {1, 4}) {
    energy::EnergyConfig e;
    e.memory_latency = latency;
    array::CimArray mem(cfg(), array::MemoryKind::SttCim, e);
    mem.write_word(0, 6);
    mem.write_word(8, 3);
    mem.ledger().reset();
    Machine m(mem);
    m.set_trace(true);
    const auto s = m.run(p);
    EXPECT_EQ(m.reg(3), 5u);
    EXPECT_EQ(m.reg(4), 9u);
    EXPECT_EQ(m.reg(5), ~6u);
    EXPECT_EQ(s.cim_accesses, 3u);
    EXPECT_EQ(s.accesses(), mem.ledger().accesses());
    EXPECT_EQ(s.cycles, 6u + 3u * latency);
    ASSERT_EQ(m.trace().size(), 3u);
    EXPECT_EQ(m.trace()[0].cim_type, 6);
    EXPECT_EQ(m.trace()[0].addr_b, 8u);
  }
}

TEST(Cpu, BusControlBits) {
  BusTransaction t;
  t.cim_type = 7;
  t.reduce = 1;
  t.lanes = 8;
  EXPECT_EQ(t.control_bits(), 7 | (1 << 3) | (7 << 5));
}

TEST(Cpu, MisalignedCimTraps) {
  const auto p = assemble("ADDI r1, r0, 0\nADDI r2, r0, 1\nCIMAND r1, r2, r3\nHALT\n");
  array::CimArray mem(cfg(), array::MemoryKind::SttCim);
  Machine m(mem);
  try {
    m.run(p);
    FAIL();
  } catch (const Trap& t) {
    EXPECT_EQ(t.pc(), 2u);
  }
}

TEST(Cpu, CimOnBaselineMemoryTraps) {
  array::CimArray mem(cfg(), array::MemoryKind::SttMram);
  Machine m(mem);
  EXPECT_THROW(m.run(assemble("ADDI r2, r0, 8\nCIMOR r1, r2, r3\n")), Trap);
}

TEST(Cpu, StepLimit) {
  array::CimArray mem(cfg(), array::MemoryKind::SttCim);
  Machine m(mem);
  m.set_step_limit(100);
  EXPECT_THROW(m.run(assemble("x: JMP x\n")), Trap);
}

TEST(Cpu, SpareWriteAndReplicationAccounting) {
  const auto p = assemble(R"(
      ADDI r5, r0, 77
      SPWR r5, 0
      SPWR r5, 2
      ADDI r1, r0, 16
      REPL r5, r1
      HALT
  )");
  array::CimArray mem(cfg(), array::MemoryKind::SttCim);
  Machine m(mem);
  const auto s = m.run(p);
  EXPECT_EQ(s.special_writes, 3u);  // two banks, then one
  EXPECT_EQ(s.writes, 8u);          // one per word slot of the replicated row
  EXPECT_EQ(s.accesses(), mem.ledger().accesses());
  EXPECT_EQ(mem.peek(16 + 7).data, 77u);
  array::CimArray flag(cfg(), array::MemoryKind::SttCim);
  flag.set_replicate_as_special_write(true);
  Machine mf(flag);
  EXPECT_EQ(mf.run(p).special_writes, 4u);
  EXPECT_THROW(Machine(mem).run(assemble("SPWR r0, 4\n")), Trap);
}

TEST(Cpu, VectorInstruction) {
  const auto p = assemble("ADDI r1, r0, 0\nADDI r2, r0, 8\nVCIM.ADD.SUM.8 r1, r2, r3\nHALT\n");
  array::CimArray mem(cfg(), array::MemoryKind::SttCim);
  for (Address k = 0; k < 8; ++k) {
    mem.write_word(k, k);
    mem.write_word(8 + k, 100);
  }
  Machine m(mem);
  const auto s = m.run(p);
  EXPECT_EQ(m.reg(3), 828u);
  EXPECT_EQ(s.vcim_accesses, 1u);
}

TEST(Cpu, FaultSensorTriggersNearMemoryCorrection) {
  const auto p = assemble("ADDI r2, r0, 8\nCIMAND r1, r2, r3\nCIMXOR r1, r2, r4\nHALT\n");
  array::CimArray mem(cfg(), array::MemoryKind::SttCim);
  mem.write_word(0, 0xF);
  mem.write_word(8, 0x3);
  array::FaultInjectingSensor s(1.0, 3, array::FaultMode::PerAccess, mem.code().code_bits());
  Machine m(mem);
  m.set_fault_sensor(&s);
  const auto st = m.run(p);
  EXPECT_EQ(m.reg(3), 0x3u);
  EXPECT_EQ(m.reg(4), 0xCu);
  EXPECT_EQ(st.nm_corrections, 1u);
  EXPECT_EQ(st.accesses(), 2u + 2u);
}
