#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "sttcim/array.hpp"
#include "sttcim/error_flow.hpp"

using namespace sttcim;
using namespace sttcim::array;

namespace {

Word expected(CimOp op, Word a, Word b) {
  switch (op) {
    case CimOp::Read: return a;
    case CimOp::Not: return ~a;
    case CimOp::And: return a & b;
    case CimOp::Or: return a | b;
    case CimOp::Nand: return ~(a & b);
    case CimOp::Nor: return ~(a | b);
    case CimOp::Xor: return a ^ b;
    case CimOp::Add: return a + b;
  }
  return 0;
}

ArrayConfig small_config() {
  ArrayConfig c;
  c.banks = 2;
  c.rows_per_bank = 9;
  c.words_per_row = 8;
  return c;
}

}  // namespace

TEST(Array, CimTypeEncodingRoundTrips) {
  for (CimOp op : kAllOps) EXPECT_EQ(decode_cim_type(encode(op)), op);
  EXPECT_EQ(encode(CimOp::Xor), 6u);
  EXPECT_THROW(decode_cim_type(8), Error);
}

TEST(Array, AnalogSensingMatchesLogical) {
  const device::DeviceParams p;
  for (int ab = 0; ab < 4; ++ab) EXPECT_EQ(sense_column_analog(p, ab & 2, ab & 1), sense_column(ab & 2, ab & 1));
}

TEST(Array, EveryOpOnRandomWords) {
  CimArray arr(small_config(), MemoryKind::SttCim);
  std::mt19937 rng(3);
  for (int i = 0; i < 200; ++i) {
    const Word a = rng(), b = rng();
    arr.write_word(5, a);
    arr.write_word(13, b);  // next row, same group
    for (CimOp op : kAllOps) {
      EXPECT_EQ(arr.cim_word(5, 13, op).value, expected(op, a, b)) << to_string(op);
    }
  }
}

TEST(Array, AddCarryOut) {
  CimArray arr(small_config(), MemoryKind::SttCim);
  arr.write_word(0, 0xFFFFFFFF);
  arr.write_word(8, 1);
  const auto r = arr.cim_word(0, 8, CimOp::Add);
  EXPECT_EQ(r.value, 0u);
  EXPECT_TRUE(r.carry_out);
}

TEST(Array, XorSidebandIsACodeword) {
  CimArray arr(small_config(), MemoryKind::SttCim);
  arr.write_word(1, 0x1234);
  arr.write_word(9, 0xABCD);
  const auto r = arr.cim_word(1, 9, CimOp::And);
  EXPECT_EQ(r.xor_sideband, arr.code().encode(0x1234 ^ 0xABCD));
}

TEST(Array, AlignmentRules) {
  CimArray arr(small_config(), MemoryKind::SttCim);
  EXPECT_NO_THROW(arr.check_alignment(2, 10));
  EXPECT_THROW(arr.check_alignment(2, 3), AlignmentError);              // same row
  EXPECT_THROW(arr.check_alignment(2, 11), AlignmentError);             // other group
  EXPECT_THROW(arr.check_alignment(2, 2 + 64), AlignmentError);         // other bank
  EXPECT_THROW(arr.cim_word(2, 3, CimOp::Xor), AlignmentError);
  EXPECT_NO_THROW(arr.cim_word(2, 3, CimOp::Not));                      // single operand
}

TEST(Array, BaselineArrayRefusesCim) {
  CimArray arr(small_config(), MemoryKind::SttMram);
  EXPECT_THROW(arr.cim_word(0, 8, CimOp::Xor), Error);
  EXPECT_EQ(arr.code().kind(), ecc::CodeKind::Secded);
}

TEST(Array, AccountingPerOperation) {
  CimArray arr(small_config(), MemoryKind::SttCim);
  arr.write_word(0, 1);
  arr.read_word(0);
  arr.cim_word(0, 8, CimOp::Or);
  const auto& l = arr.ledger();
  EXPECT_EQ(l.count(energy::OpKind::CimWrite), 1u);
  EXPECT_EQ(l.count(energy::OpKind::CimRead), 1u);
  EXPECT_EQ(l.count(energy::OpKind::CimOp), 1u);
  EXPECT_EQ(l.accesses(), 3u);
}

TEST(Array, SpareRowOnlyByBroadcast) {
  CimArray arr(small_config(), MemoryKind::SttCim);
  const Address spare = arr.layout().spare_base();
  EXPECT_THROW(arr.write_word(spare, 1), AddressError);
  arr.broadcast_spare_write({1}, 0x77);
  for (unsigned g = 0; g < 8; ++g) {
    EXPECT_EQ(arr.peek(arr.layout().spare_address(1, g)).data, 0x77u);
    EXPECT_EQ(arr.peek(arr.layout().spare_address(0, g)).data, 0u);
  }
  EXPECT_EQ(arr.ledger().count(energy::OpKind::SpecialWrite), 1u);
  // Any user word now pairs with its spare partner.
  arr.write_word(70, 0x70);
  EXPECT_EQ(arr.cim_word(70, arr.layout().spare_partner(70), CimOp::Xor).value, 0x70u ^ 0x77u);
}

TEST(Array, ColumnReplicationFillsRow) {
  CimArray arr(small_config(), MemoryKind::SttCim);
  arr.column_replicate_write(0, 4, 0x5A);
  for (unsigned g = 0; g < 8; ++g) EXPECT_EQ(arr.peek(4 * 8 + g).data, 0x5Au);
  EXPECT_EQ(arr.ledger().count(energy::OpKind::CimWrite), 8u);
  arr.set_replicate_as_special_write(true);
  arr.column_replicate_write(0, 5, 0x5B);
  EXPECT_EQ(arr.ledger().count(energy::OpKind::SpecialWrite), 1u);
}

TEST(Array, VectorSumAndZeroCompare) {
  CimArray arr(small_config(), MemoryKind::SttCim);
  std::uint64_t sum = 0;
  for (Address k = 0; k < 8; ++k) {
    arr.write_word(16 + k, 1000 + k);
    arr.write_word(24 + k, 0xFFFFFFF0u + k);
    sum += (1000 + k) + std::uint64_t{0xFFFFFFF0u + k};  // lane sums include the carry
  }
  EXPECT_EQ(arr.vcim(16, 24, CimOp::Add, ReduceKind::Summation, 8).value, sum);
  EXPECT_EQ(arr.ledger().count(energy::OpKind::Vcim8), 1u);
  // Zero-compare over XOR counts equal lanes.
  for (Address k = 0; k < 4; ++k) arr.write_word(32 + k, k < 2 ? 1000 + k : 5);
  for (Address k = 4; k < 8; ++k) arr.write_word(32 + k, 0);
  const auto z = arr.vcim(16, 32, CimOp::Xor, ReduceKind::ZeroCompare, 4);
  EXPECT_EQ(z.lanes.size(), 4u);
  EXPECT_EQ(z.value, 0b1100u);  // one flag per lane whose XOR is nonzero
  EXPECT_THROW(arr.vcim(17, 25, CimOp::Add, ReduceKind::Summation, 4), AlignmentError);
  EXPECT_THROW(arr.vcim(16, 24, CimOp::Not, ReduceKind::Summation, 4), Error);
}

TEST(Array, NominalSensorAgreesWithFunctionalPath) {
  CimArray arr(small_config(), MemoryKind::SttCim);
  NominalSensor s;
  std::mt19937 rng(9);
  for (int i = 0; i < 50; ++i) {
    arr.write_word(0, rng());
    arr.write_word(8, rng());
    for (CimOp op : kAllOps) EXPECT_EQ(arr.cim_word_noisy(0, 8, op, s), arr.cim_word(0, 8, op));
  }
}

TEST(Array, VariationSensorIsDeterministicPerCell) {
  const device::DeviceParams p;
  const auto v = device::VariationSpec{}.scaled(3.0);
  CimArray a1(small_config(), MemoryKind::SttCim), a2(small_config(), MemoryKind::SttCim);
  VariationSensor s1(p, v, 4, small_config(), a1.code().code_bits());
  VariationSensor s2(p, v, 4, small_config(), a2.code().code_bits());
  for (auto* a : {&a1, &a2}) {
    a->write_word(3, 0x0BADF00D);
    a->write_word(11, 0x12345678);
  }
  const auto r1 = a1.cim_word_noisy(3, 11, CimOp::Xor, s1);
  const auto r1b = a1.cim_word_noisy(3, 11, CimOp::Xor, s1);
  const auto r2 = a2.cim_word_noisy(3, 11, CimOp::Xor, s2);
  EXPECT_EQ(r1, r1b);  // static variation: same cells, same answer
  EXPECT_EQ(r1, r2);
}

TEST(Array, FaultInjectionFlipsXorColumn) {
  CimArray arr(small_config(), MemoryKind::SttCim);
  arr.write_word(0, 0xF0F0);
  arr.write_word(8, 0x0FF0);
  FaultInjectingSensor s(0.0, 1, FaultMode::PerColumn, arr.code().code_bits());
  for (unsigned col : {0u, 7u, 33u, 50u}) {
    s.force_next({col});
    const auto r = arr.cim_word_noisy(0, 8, CimOp::Xor, s);
    EXPECT_EQ(r.xor_sideband ^ arr.code().encode(0xF0F0 ^ 0x0FF0), Codeword{1} << col);
  }
  EXPECT_EQ(s.injected(), 4u);
}

TEST(Array, ErrorFlowCorrectsXorInPlaceAndRecomputesOthers) {
  CimArray arr(small_config(), MemoryKind::SttCim);
  arr.write_word(0, 100);
  arr.write_word(8, 23);
  FaultInjectingSensor s(0.0, 1, FaultMode::PerColumn, arr.code().code_bits());
  s.force_next({2, 19, 40});
  const auto fx = ecc::cim_error_flow(arr, 0, 8, CimOp::Xor, s);
  EXPECT_EQ(fx.result.value, 100u ^ 23u);
  EXPECT_EQ(fx.accesses_used, 1u);
  EXPECT_EQ(fx.corrected_columns, 3u);
  s.force_next({5});
  const auto fa = ecc::cim_error_flow(arr, 0, 8, CimOp::Add, s);
  EXPECT_EQ(fa.result.value, 123u);
  EXPECT_EQ(fa.accesses_used, 3u);
  EXPECT_TRUE(fa.near_memory);
  EXPECT_EQ(arr.ledger().count(energy::OpKind::NmCorrection), 1u);
  s.force_next({1, 2, 3, 4});
  EXPECT_TRUE(ecc::cim_error_flow(arr, 0, 8, CimOp::Or, s).hard_error());
}

TEST(Array, ReadFlowCorrectsSingleRowErrors) {
  CimArray arr(small_config(), MemoryKind::SttCim);
  arr.write_word(0, 0xC0FFEE);
  FaultInjectingSensor s(0.0, 1, FaultMode::PerColumn, arr.code().code_bits());
  s.force_next({4});
  const auto f = ecc::cim_error_flow(arr, 0, 0, CimOp::Not, s);
  EXPECT_EQ(f.result.value, static_cast<Word>(~0xC0FFEEu));
  EXPECT_EQ(f.accesses_used, 1u);
}

TEST(Array, VectorErrorFlow) {
  CimArray arr(small_config(), MemoryKind::SttCim);
  for (Address k = 0; k < 8; ++k) {
    arr.write_word(k, k + 1);
    arr.write_word(8 + k, 10 * k);
  }
  FaultInjectingSensor s(0.0, 1, FaultMode::PerColumn, arr.code().code_bits());
  s.force_next({6});  // column 6 of every lane fails
  const auto f = ecc::vcim_error_flow(arr, 0, 8, CimOp::Add, ReduceKind::Summation, 8, s);
  EXPECT_EQ(f.value, 36u + 280u);
  EXPECT_EQ(f.near_memory_lanes, 8u);
  EXPECT_EQ(f.accesses_used, 17u);
}

TEST(Array, InjectedStorageFlipCorrectedOnRead) {
  CimArray arr(small_config(), MemoryKind::SttCim);
  arr.write_word(3, 42);
  arr.inject_flip(3, 10);
  const auto d = arr.read_word(3);
  EXPECT_EQ(d.status, ecc::DecodeStatus::Corrected);
  EXPECT_EQ(d.data, 42u);
}

TEST(Array, DumpFormat) {
  ArrayConfig c;
  c.banks = 1;
  c.rows_per_bank = 3;
  c.words_per_row = 2;
  c.vector_length = 1;
  CimArray arr(c, MemoryKind::SttCim);
  arr.write_word(0, 1);
  std::ostringstream out;
  arr.dump(out);
  const std::string s = out.str();
  EXPECT_EQ(s.rfind("B0 R0000: ", 0), 0u);
  EXPECT_EQ(std::count(s.begin(), s.end(), '\n'), 3);  // two user rows and the spare row
}
