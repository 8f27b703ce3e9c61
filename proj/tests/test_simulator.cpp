#include "aoi/simulator.hpp"
#include "aoi/zw_model.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace aoi;

namespace {

SimConfig config(ModelKey m, std::uint64_t horizon, int reps, std::uint64_t seed = 1) {
  SimConfig c;
  c.model = m;
  c.horizon = horizon;
  c.replications = reps;
  c.seed = seed;
  return c;
}

}  // namespace

TEST(SimConfig, Validation) {
  auto c = config(ModelKey{Policy::kZw, 1, 1}, 999, 1);
  EXPECT_THROW(simulate(c), std::invalid_argument);
  c.horizon = 2000;
  c.warmup = 2000;
  EXPECT_THROW(simulate(c), std::invalid_argument);
  c.warmup.reset();
  c.replications = 0;
  EXPECT_THROW(simulate(c), std::invalid_argument);
  EXPECT_EQ(config(ModelKey{}, 100000, 1).effective_warmup(), 1000u);
}

TEST(EmpiricalAoiCdf, SingleCycleIsUniform) {
  const EmpiricalAoiCdf f({CycleRecord{1.0, 2.0, 3.0}});
  EXPECT_EQ(f(0.5), 0.0);
  EXPECT_DOUBLE_EQ(f(2.0), 0.5);
  EXPECT_EQ(f(3.0), 1.0);
  EXPECT_EQ(f(10.0), 1.0);
  EXPECT_EQ(f.breakpoints().size(), 2u);
  EXPECT_EQ(EmpiricalAoiCdf()(1.0), 0.0);
}

TEST(EmpiricalAoiCdf, LengthWeighted) {
  // cycles [0,1) and [0,3): at x = 1 the time below is 1 + 1 out of 4
  const EmpiricalAoiCdf f({CycleRecord{0.0, 1.0, 1.0}, CycleRecord{0.0, 3.0, 3.0}});
  EXPECT_DOUBLE_EQ(f(1.0), 0.5);
  EXPECT_DOUBLE_EQ(f(2.0), 0.75);
}

TEST(EmpiricalPaoiCdf, Step) {
  const EmpiricalPaoiCdf f({CycleRecord{0, 1, 2.0}, CycleRecord{0, 1, 1.0}, CycleRecord{0, 1, 2.0}});
  EXPECT_EQ(f(0.9), 0.0);
  EXPECT_DOUBLE_EQ(f(1.0), 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(f.left_limit(2.0), 1.0 / 3.0);
  EXPECT_EQ(f(2.0), 1.0);
  EXPECT_EQ(f.samples().front(), 1.0);
}

TEST(Simulate, DeterministicAcrossSchedules) {
  auto c = config(ModelKey{Policy::kFp, 0.5, 0.1, 1.0, 3}, 5000, 3, 42);
  const auto a = simulate(c);
  c.parallel = false;
  const auto b = simulate(c);
  EXPECT_EQ(a.mean_aoi, b.mean_aoi);
  EXPECT_EQ(a.mean_paoi, b.mean_paoi);
  EXPECT_EQ(a.cycle_count, b.cycle_count);
  EXPECT_EQ(a.entry_counts, b.entry_counts);
  c.seed = 43;
  EXPECT_NE(simulate(c).mean_aoi, a.mean_aoi);
}

TEST(Simulate, CycleAccounting) {
  const auto r = simulate(config(ModelKey{Policy::kZw, 1, 1}, 10000, 2));
  EXPECT_EQ(r.cycle_count, 2u * (10000 - 100));
  EXPECT_EQ(r.per_replication.size(), 2u);
  EXPECT_TRUE(std::isfinite(r.mean_aoi_se));
  for (const auto& c : r.cycles) {
    EXPECT_GE(c.start_age, 0.0);
    EXPECT_GT(c.length, 0.0);
    EXPECT_NEAR(c.peak, c.start_age + c.length, 1e-9 * c.peak);
  }
  EXPECT_TRUE(std::isnan(simulate(config(ModelKey{Policy::kZw, 1, 1}, 2000, 1)).mean_aoi_se));
}

TEST(Simulate, BookkeepingIdentities) {
  const auto r = simulate(config(ModelKey{Policy::kFp, 1.0, 0.3, 2.0, 4}, 8000, 3, 8));
  double area = 0.0, len = 0.0, peak = 0.0;
  for (const auto& c : r.cycles) {
    area += c.start_age * c.length + 0.5 * c.length * c.length;
    len += c.length;
    peak += c.peak;
  }
  EXPECT_EQ(r.mean_aoi, area / len);
  EXPECT_EQ(r.mean_paoi, peak / static_cast<double>(r.cycles.size()));
}

TEST(Simulate, ZwMatchesClosedForm) {
  for (auto [m1, m2] : {std::pair{1.0, 1.0}, std::pair{0.5, 0.1}}) {
    const auto r = simulate(config(ModelKey{Policy::kZw, m1, m2}, 125000, 8, 3));
    const auto cf = zw_closed_form_means(ZwParams(m1, m2));
    EXPECT_LT(std::abs(r.mean_aoi - cf.mean_aoi), 4.0 * r.mean_aoi_se) << m1 << "," << m2;
    EXPECT_LT(std::abs(r.mean_paoi - cf.mean_paoi), 4.0 * r.mean_paoi_se) << m1 << "," << m2;
    EXPECT_EQ(r.order_violations, 0u);
  }
}

TEST(Simulate, ZwDiscardsStalePackets) {
  // the slow server almost always delivers something already superseded
  const auto r = simulate(config(ModelKey{Policy::kZw, 1.0, 0.01}, 20000, 1));
  EXPECT_GT(r.discarded_at_monitor, 0u);
  EXPECT_EQ(r.stale_discards, r.discarded_at_monitor);
  EXPECT_EQ(r.preempted, 0u);
  const double share = static_cast<double>(r.discarded_at_monitor) / static_cast<double>(r.generated);
  EXPECT_GT(share, 0.005);
}

TEST(Simulate, FreezeNeverDiscardsAtMonitor) {
  for (auto m : {ModelKey{Policy::kFp, 0.5, 0.1, 1.0, 10}, ModelKey{Policy::kPreemptOnly, 1.0, 0.01}}) {
    const auto r = simulate(config(m, 20000, 2));
    EXPECT_EQ(r.discarded_at_monitor, 0u);
    EXPECT_EQ(r.order_violations, 0u);
    EXPECT_GT(r.preempted, 0u);
  }
}

TEST(Simulate, FpMatchesAnalyticMeans) {
  const ModelKey m{Policy::kFp, 0.5, 0.1, 1.0, 10};
  const auto r = simulate(config(m, 100000, 8, 11));
  const auto a = analyze(m, GridSpec{200, 0.01, 40.0});
  EXPECT_LT(std::abs(r.mean_aoi - a.summary.mean_aoi), 4.0 * r.mean_aoi_se);
  EXPECT_LT(std::abs(r.mean_paoi - a.summary.mean_paoi), 4.0 * r.mean_paoi_se);
}

TEST(KsDistance, TablesAndMismatch) {
  const auto a = analyze(ModelKey{Policy::kFp, 0.5, 0.1, 1.0, 10}, GridSpec{200, 0.01, 40.0});
  EXPECT_EQ(ks_distance(a.summary.aoi_table, a.summary.aoi_table), 0.0);
  const auto other = analyze(ModelKey{Policy::kFp, 0.5, 0.2, 1.0, 10}, GridSpec{200, 0.01, 40.0});
  EXPECT_GT(ks_distance(a.summary.aoi_table, other.summary.aoi_table), 0.02);
  EXPECT_GT(ks_distance(a.summary.paoi_table, other.summary.paoi_table), 0.02);
  const auto r = simulate(config(ModelKey{Policy::kZw, 0.5, 0.1}, 2000, 1));
  EXPECT_THROW(empirical_vs_analytic(r, a), std::invalid_argument);

  const auto po = simulate(config(ModelKey{Policy::kPreemptOnly, 0.5, 0.1}, 50000, 1));
  const auto limit = analyze(ModelKey{Policy::kFp, 0.5, 0.1, kPreemptOnlyLambda, 1}, GridSpec{400, 0.01, 40.0});
  const auto ks = empirical_vs_analytic(po, limit);
  EXPECT_LT(ks.aoi, 0.02);
  EXPECT_LT(ks.paoi, 0.02);
}
