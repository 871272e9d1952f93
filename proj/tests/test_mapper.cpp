#include <gtest/gtest.h>

#include <set>

#include "sttcim/mapper.hpp"

using namespace sttcim;
using namespace sttcim::mapper;

namespace {

ArrayConfig cfg(unsigned banks = 4, unsigned rows = 33, unsigned wpr = 8) {
  ArrayConfig c;
  c.banks = banks;
  c.rows_per_bank = rows;
  c.words_per_row = wpr;
  return c;
}

}  // namespace

TEST(Mapper, AlignmentPredicateExhaustive) {
  ArrayConfig c = cfg(2, 5, 4);
  c.vector_length = 4;
  const AddressLayout l(c);
  for (Address a = 0; a < l.end(); ++a) {
    for (Address b = 0; b < l.end(); ++b) {
      const auto la = l.locate(a), lb = l.locate(b);
      const bool want = la.bank == lb.bank && la.row != lb.row && la.group == lb.group;
      ASSERT_EQ(alignment_ok(a, b, l), want) << a << ' ' << b;
    }
  }
}

TEST(Mapper, Type1AlignedWhenBothFitInOneBank) {
  const auto plan = plan_type1(100, cfg());
  EXPECT_EQ(plan.pattern, Pattern::Type1Aligned);
  EXPECT_TRUE(verify_plan(plan).empty());
  const auto l = plan.layout();
  for (std::uint32_t i = 0; i < 100; ++i) EXPECT_TRUE(alignment_ok(plan.address_of("A", i), plan.address_of("B", i), l));
  EXPECT_TRUE(plan.is_linear("A"));
  EXPECT_EQ(plan.overhead_writes, 0u);
}

TEST(Mapper, Type1InterleavesWhenLarge) {
  const auto plan = plan_type1(512, cfg());  // 64 rows each, 32 user rows per bank
  EXPECT_EQ(plan.pattern, Pattern::Type1RowInterleaved);
  EXPECT_TRUE(verify_plan(plan).empty());
  const auto l = plan.layout();
  std::set<Address> seen;
  for (std::uint32_t i = 0; i < 512; ++i) {
    const Address a = plan.address_of("A", i), b = plan.address_of("B", i);
    EXPECT_TRUE(alignment_ok(a, b, l));
    EXPECT_TRUE(seen.insert(a).second && seen.insert(b).second);
  }
  EXPECT_GT(plan.banks_of("A").size(), 1u);
}

TEST(Mapper, Type1CapacityError) {
  EXPECT_THROW(plan_type1(2000, cfg()), CapacityError);
}

TEST(Mapper, Type2OneSpareFillPerElementAndBank) {
  const auto c = cfg();
  const auto plan = plan_type2(6, 400, c);
  EXPECT_EQ(plan.pattern, Pattern::Type2SpareRow);
  EXPECT_TRUE(verify_plan(plan).empty());
  EXPECT_EQ(plan.spare_fills.size(), 6u);
  const auto banks = plan.banks_of("B").size();
  EXPECT_EQ(plan.overhead_writes, 6u * banks);
  EXPECT_EQ(plan.predicted_special_writes(false), 6u * banks);
  const auto l = plan.layout();
  for (std::uint32_t i = 0; i < 400; ++i) {
    const Address b = plan.address_of("B", i);
    EXPECT_TRUE(alignment_ok(b, l.spare_partner(b), l));
  }
}

TEST(Mapper, Type3ReplicaAlignsWithEveryElement) {
  const auto plan = plan_type3(4, 300, cfg());
  EXPECT_EQ(plan.pattern, Pattern::Type3ColumnReplication);
  EXPECT_TRUE(verify_plan(plan).empty());
  const auto l = plan.layout();
  for (std::uint32_t i = 0; i < 300; ++i) {
    const Address b = plan.address_of("B", i);
    const auto loc = l.locate(b);
    for (std::uint32_t k = 0; k < 4; ++k) {
      const auto row = plan.replica_row(k, loc.bank);
      ASSERT_TRUE(row.has_value());
      EXPECT_TRUE(alignment_ok(b, l.address_of({loc.bank, *row, loc.group}), l));
    }
  }
  EXPECT_EQ(plan.overhead_writes, plan.replications.size());
  EXPECT_EQ(plan.predicted_plain_writes(false), plan.replications.size() * 8);
}

TEST(Mapper, VerifyDetectsBrokenPlan) {
  auto plan = plan_type1(64, cfg());
  ASSERT_TRUE(verify_plan(plan).empty());
  plan.get("B");
  for (auto& p : plan.arrays) {
    if (p.name == "B") p.segments[0].bank = 1;  // operands now in different banks
  }
  EXPECT_FALSE(verify_plan(plan).empty());
}

TEST(Mapper, TextRoundTrip) {
  for (const auto& plan : {plan_type1(100, cfg(), {{"C", 100}}), plan_type1(512, cfg()), plan_type2(5, 200, cfg()),
                           plan_type3(3, 250, cfg(), {{"R", 1}})}) {
    const std::string text = to_text(plan);
    const auto back = parse_plan(text);
    EXPECT_EQ(to_text(back), text);
    EXPECT_EQ(back.pattern, plan.pattern);
    EXPECT_EQ(back.config, plan.config);
    for (const auto& a : plan.arrays) {
      for (std::uint32_t i = 0; i < a.length; ++i) ASSERT_EQ(back.address_of(a.name, i), plan.address_of(a.name, i));
    }
  }
}

TEST(Mapper, ParseErrors) {
  EXPECT_THROW(parse_plan("PATTERN NOPE\n"), ConfigError);
  EXPECT_THROW(parse_plan("PATTERN TYPE1_ALIGNED\nBOGUS 1\n"), ConfigError);
  EXPECT_THROW(parse_pattern("type9"), ConfigError);
}
