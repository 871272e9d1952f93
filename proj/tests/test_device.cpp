#include <gtest/gtest.h>

#include <cmath>

#include "sttcim/device.hpp"

using namespace sttcim;
using namespace sttcim::device;

TEST(Device, NominalResistancesFromRaAndTmr) {
  const DeviceParams p;
  const auto r = nominal_resistances(p);
  EXPECT_DOUBLE_EQ(r.r_p, 18.0 / (0.04 * 0.04));
  EXPECT_NEAR(r.r_ap, 25200.0, 1e-9);
  EXPECT_DOUBLE_EQ(p.ref_resistance, 0.5 * (r.r_p + r.r_ap));
}

TEST(Device, CurrentLevelsFollowOhmsLaw) {
  const auto c = current_levels(DeviceParams{});
  // V / (R_mtj + R_t) by hand.
  EXPECT_NEAR(c.i_p, 0.1 / 14250.0, 1e-15);
  EXPECT_NEAR(c.i_ap, 0.1 / 28200.0, 1e-15);
  EXPECT_NEAR(c.i_ref_read, 0.1 / 21225.0, 1e-15);
  EXPECT_NEAR(c.i_p * 1e6, 7.0175, 1e-4);
  EXPECT_NEAR(c.i_ap * 1e6, 3.5461, 1e-4);
  EXPECT_NEAR(c.i_ref_or * 1e6, 8.257, 1e-3);
  EXPECT_NEAR(c.i_ref_and * 1e6, 11.729, 1e-3);
}

TEST(Device, ReferencesSeparateTheThreeTwoCellLevels) {
  const auto c = current_levels(DeviceParams{});
  EXPECT_LT(c.i_apap, c.i_ref_or);
  EXPECT_LT(c.i_ref_or, c.i_ap_p);
  EXPECT_LT(c.i_ap_p, c.i_ref_and);
  EXPECT_LT(c.i_ref_and, c.i_pp);
  EXPECT_EQ(classify_two_cell(c.i_apap, c.i_ref_or, c.i_ref_and), 0);
  EXPECT_EQ(classify_two_cell(c.i_ap_p, c.i_ref_or, c.i_ref_and), 1);
  EXPECT_EQ(classify_two_cell(c.i_pp, c.i_ref_or, c.i_ref_and), 2);
}

TEST(Device, StackSubsetsReproduceReferences) {
  const DeviceParams p;
  const auto s = nominal_stack(p);
  const auto c = current_levels(p);
  EXPECT_DOUBLE_EQ(s.current(kReadRef), c.i_ref_read);
  EXPECT_DOUBLE_EQ(s.current(kOrRef), c.i_ref_or);
  EXPECT_DOUBLE_EQ(s.current(kAndRef), c.i_ref_and);
}

TEST(Device, SenseTieResolvesLow) {
  EXPECT_FALSE(sense_bit(1.0, 1.0));
  EXPECT_TRUE(sense_bit(1.0 + 1e-12, 1.0));
}

TEST(Device, InvalidParametersRejected) {
  DeviceParams p;
  p.ref_resistance = 30000;
  EXPECT_THROW(p.validate(), ConfigError);
  p = {};
  p.tmr = 0;
  EXPECT_THROW(p.validate(), ConfigError);
  p = {};
  p.access_resistance = 0;
  EXPECT_THROW(current_levels(p), ConfigError);
}

TEST(Device, ZeroVariationNeverFails) {
  const auto r = monte_carlo_failures(DeviceParams{}, VariationSpec::none(), 20000, 3);
  EXPECT_EQ(r.read_decision_rate, 0.0);
  EXPECT_EQ(r.cim_decision_rate, 0.0);
  EXPECT_EQ(r.disturb_reduced_fraction, 1.0);
}

TEST(Device, MonteCarloIndependentOfThreadCount) {
  const DeviceParams p;
  const VariationSpec v;
  const auto one = monte_carlo_failures(p, v, 70000, 11, 1);
  const auto four = monte_carlo_failures(p, v, 70000, 11, 4);
  EXPECT_EQ(one.read_decision_rate, four.read_decision_rate);
  EXPECT_EQ(one.cim_decision_rate, four.cim_decision_rate);
  EXPECT_EQ(one.mean_cim_per_cell_current, four.mean_cim_per_cell_current);
  const auto other_seed = monte_carlo_failures(p, v, 70000, 12, 1);
  EXPECT_NE(one.cim_decision_rate, other_seed.cim_decision_rate);
}

TEST(Device, SamplesAreCounterBased) {
  const DeviceParams p;
  const VariationSpec v;
  const auto a = sample_cell(p, v, 5, 1000);
  sample_cell(p, v, 5, 999);
  const auto b = sample_cell(p, v, 5, 1000);
  EXPECT_EQ(a.r_p_eff, b.r_p_eff);
  EXPECT_EQ(a.r_t_eff, b.r_t_eff);
  EXPECT_NEAR(a.r_ap_eff / a.r_p_eff, 1 + p.tmr, 1e-12);
}

TEST(Device, SampledSigmaMatchesSpec) {
  // Area enters R_MTJ inversely; with tox fixed the spread of R_P follows
  // the area sigma to first order.
  VariationSpec v = VariationSpec::none();
  v.sigma_area_rel = 0.05;
  const DeviceParams p;
  const auto nominal = nominal_resistances(p).r_p;
  double s = 0, s2 = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double x = sample_cell(p, v, 1, i).r_p_eff / nominal;
    s += x;
    s2 += x * x;
  }
  const double mean = s / n, sd = std::sqrt(s2 / n - mean * mean);
  EXPECT_NEAR(sd, 0.05, 0.005);
}

TEST(Device, SharedPathCarriesLessCurrentPerCell) {
  const double branch = 14250;
  EXPECT_LT(shared_path_cell_current(branch, branch, 500, 0.1), lone_path_cell_current(branch, 500, 0.1));
  // No line resistance: the cells are independent.
  EXPECT_NEAR(shared_path_cell_current(branch, 28200, 0, 0.1), 0.1 / branch, 1e-15);
}

TEST(Device, ConfigKeysApply) {
  DeviceParams p;
  VariationSpec v;
  const auto cfg = KeyValueConfig::parse_string("tmr_pct = 100\ntox_sigma_pct = 3\nmtj_side_nm=50\n");
  apply_config(cfg, p, v);
  EXPECT_DOUBLE_EQ(p.tmr, 1.0);
  EXPECT_DOUBLE_EQ(v.sigma_tox_rel, 0.03);
  EXPECT_NEAR(p.mtj_area, 0.0025, 1e-15);
  const auto r = nominal_resistances(p);
  EXPECT_DOUBLE_EQ(p.ref_resistance, 0.5 * (r.r_p + r.r_ap));
  EXPECT_TRUE(cfg.unused_keys().empty());
}

TEST(Device, FailureCsvHasHeaderAndOneRow) {
  FailureReport r;
  r.samples = 10;
  std::ostringstream out;
  write_failure_csv(out, r);
  const std::string s = out.str();
  EXPECT_EQ(s.rfind("samples,read_decision_rate", 0), 0u);
  EXPECT_EQ(std::count(s.begin(), s.end(), '\n'), 2);
}
