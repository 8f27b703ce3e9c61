#include "aoi/aoi_metrics.hpp"
#include "aoi/fp_model.hpp"
#include "aoi/model.hpp"
#include "aoi/zw_model.hpp"
#include "support/oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace aoi;

namespace {

std::vector<AmcSpec> sample_chains() {
  std::vector<AmcSpec> v;
  v.push_back(build_zw_amc(ZwParams(1.0, 1.0)));
  v.push_back(build_zw_amc(ZwParams(0.5, 0.1)));
  v.push_back(make_fp_amc(FpParams(0.5, 0.1, 1.0, 1)));
  v.push_back(make_fp_amc(FpParams(0.5, 0.1, 1.0, 10)));
  v.push_back(make_fp_amc(FpParams(1.0, 1.0, 3.0, 50)));
  return v;
}

}  // namespace

TEST(MetricCdf, ZeroAtOriginAndValidation) {
  for (const auto& amc : sample_chains()) {
    EXPECT_EQ(aoi_cdf(amc, 0.0), 0.0);
    EXPECT_EQ(paoi_cdf(amc, 0.0), 0.0);
    EXPECT_THROW(aoi_cdf(amc, -1.0), std::invalid_argument);
    EXPECT_THROW(metric_moments(amc, Metric::kAoi, 0), std::invalid_argument);
  }
}

TEST(MetricCdf, PaoiIsConditionalAbsorptionTime) {
  // peak age = absorption time of the packet chain given a successful exit
  const auto amc = build_zw_amc(ZwParams(0.5, 0.1));
  const auto mc = oracle::sample_absorption(amc.S(), amc.V(), amc.init(), 0, 400'000, 17);
  const double ks = oracle::ks_sample(mc.success_times, [&](double x) { return paoi_cdf(amc, x); });
  const double n = static_cast<double>(mc.success_times.size());
  EXPECT_LT(ks, 1.63 / std::sqrt(n));  // 1% critical value
}

TEST(MetricCdf, FpPaoiIsConditionalAbsorptionTime) {
  const auto z = build_fp_amc(FpParams(0.5, 0.1, 1.0, 3));
  const auto amc = make_fp_amc(FpParams(0.5, 0.1, 1.0, 3));
  const auto mc = oracle::sample_absorption(z.S, z.V, amc.init(), 0, 400'000, 23);
  const double ks = oracle::ks_sample(mc.success_times, [&](double x) { return paoi_cdf(amc, x); });
  EXPECT_LT(ks, 1.63 / std::sqrt(static_cast<double>(mc.success_times.size())));
}

TEST(MetricPdf, IntegratesToOneAndReproducesMoments) {
  for (const auto& amc : sample_chains()) {
    for (Metric m : {Metric::kAoi, Metric::kPaoi}) {
      const auto mom = metric_moments(amc, m, 2);
      const auto q = oracle::quadrature_0_to(80.0 * mom[0]);
      const auto t = tabulate(amc, m, q.nodes);
      std::vector<double> x1(q.nodes.size()), x2(q.nodes.size()), tail(q.nodes.size());
      for (std::size_t i = 0; i < q.nodes.size(); ++i) {
        x1[i] = q.nodes[i] * t.pdf[i];
        x2[i] = q.nodes[i] * x1[i];
        tail[i] = 1.0 - t.cdf[i];
      }
      EXPECT_NEAR(q.apply(t.pdf), 1.0, 1e-7);
      EXPECT_NEAR(q.apply(x1) / mom[0], 1.0, 1e-7);
      EXPECT_NEAR(q.apply(x2) / mom[1], 1.0, 1e-6);
      EXPECT_NEAR(q.apply(tail) / mom[0], 1.0, 1e-7);  // mean from the survival function
    }
  }
}

TEST(MetricPdf, CdfIsRunningIntegral) {
  for (const auto& amc : sample_chains()) {
    for (Metric m : {Metric::kAoi, Metric::kPaoi}) {
      const double x = metric_moments(amc, m, 1)[0];
      const auto q = oracle::quadrature_0_to(x, 1000);
      EXPECT_NEAR(q.apply(tabulate(amc, m, q.nodes).pdf), metric_cdf(amc, m, x), 1e-8);
    }
  }
}

TEST(ConditionalPh, MatchesPaoiLaw) {
  for (const auto& amc : sample_chains()) {
    const auto ph = conditional_paoi_ph(amc);
    const double mean = paoi_mean(amc);
    EXPECT_NEAR(ph_moment(ph, 1) / mean, 1.0, 1e-10);
    for (double f : {0.1, 0.5, 1.0, 3.0}) {
      EXPECT_NEAR(ph_cdf(ph, f * mean), paoi_cdf(amc, f * mean), 1e-10);
      EXPECT_NEAR(ph_pdf(ph, f * mean), paoi_pdf(amc, f * mean), 1e-9);
    }
  }
}

TEST(LogGrid, Shape) {
  const auto g = log_grid(2.0, GridSpec{});
  ASSERT_EQ(g.size(), 2001u);
  EXPECT_EQ(g[0], 0.0);
  EXPECT_NEAR(g[1], 0.02, 1e-15);
  EXPECT_NEAR(g.back(), 80.0, 1e-12);
  EXPECT_TRUE(std::is_sorted(g.begin(), g.end()));
  EXPECT_THROW(log_grid(0.0, GridSpec{}), std::invalid_argument);
  EXPECT_THROW(log_grid(1.0, GridSpec{1, 0.1, 2.0}), std::invalid_argument);
}

TEST(Tabulate, ConsistentWithPointwise) {
  const auto amc = make_fp_amc(FpParams(0.5, 0.1, 1.0, 10));
  const auto t = tabulate(amc, Metric::kAoi, log_grid(aoi_mean(amc), GridSpec{}));
  for (std::size_t i = 0; i < t.grid.size(); i += 17) {
    EXPECT_NEAR(t.cdf[i], aoi_cdf(amc, t.grid[i]), 1e-10);
    EXPECT_NEAR(t.pdf[i], aoi_pdf(amc, t.grid[i]), 1e-10);
  }
  EXPECT_TRUE(std::is_sorted(t.cdf.begin(), t.cdf.end()));
  EXPECT_GT(t.cdf.back(), 1.0 - 1e-6);
  EXPECT_NEAR(t.trapezoid_mass(), 1.0, 1e-4);
  EXPECT_GT(t.variance, 0.0);
  // interpolation stays between neighbours and clamps at the ends
  EXPECT_EQ(t.cdf_at(-1.0), 0.0);
  EXPECT_EQ(t.cdf_at(1e9), t.cdf.back());
  const double mid = 0.5 * (t.grid[100] + t.grid[101]);
  EXPECT_GE(t.cdf_at(mid), t.cdf[100]);
  EXPECT_LE(t.cdf_at(mid), t.cdf[101]);
}

TEST(Summarize, ZwReference) {
  const auto s = summarize(build_zw_amc(ZwParams(1.0, 1.0)));
  EXPECT_NEAR(s.mean_aoi, 1.25, 1e-12);
  EXPECT_NEAR(s.mean_paoi, 4.0 / 3.0, 1e-12);
  EXPECT_EQ(s.aoi_moments[0], s.mean_aoi);
  EXPECT_GT(s.p_success, 0.0);
  EXPECT_LT(s.p_success, 1.0);
  EXPECT_EQ(s.aoi_table.grid.size(), 2001u);
}

TEST(Model, PolicyParsingAndNormalization) {
  EXPECT_EQ(parse_policy("zw"), Policy::kZw);
  EXPECT_EQ(parse_policy("fp"), Policy::kFp);
  EXPECT_EQ(parse_policy("po"), Policy::kPreemptOnly);
  EXPECT_THROW(parse_policy("xx"), std::invalid_argument);
  EXPECT_EQ(to_string(Policy::kFp), "fp");

  const auto n = ModelKey{Policy::kPreemptOnly, 0.1, 0.5, 3.0, 7}.normalized();
  EXPECT_EQ(n.mu1, 0.5);
  EXPECT_EQ(n.lambda, kPreemptOnlyLambda);
  EXPECT_EQ(n.k, 1);
  EXPECT_THROW((void)(ModelKey{Policy::kFp, 1, 1, 0.0, 1}.normalized()), std::invalid_argument);
  EXPECT_THROW((void)(ModelKey{Policy::kFp, 1, 1, 1.0, 0}.normalized()), std::invalid_argument);
  EXPECT_TRUE((ModelKey{Policy::kFp, 1, 2, kPreemptOnlyLambda, 1}.same_system(ModelKey{Policy::kPreemptOnly, 2, 1})));
  EXPECT_FALSE((ModelKey{Policy::kFp, 1, 2, 1.0, 1}.same_system(ModelKey{Policy::kPreemptOnly, 2, 1})));
}

TEST(Model, AnalyzeDispatch) {
  const auto zw = analyze(ModelKey{Policy::kZw, 0.5, 0.1});
  EXPECT_NEAR(zw.summary.mean_aoi, 0.82 / 0.216, 1e-10);
  const auto fp = analyze(ModelKey{Policy::kFp, 0.5, 0.1, 1.0, 10});
  EXPECT_NEAR(fp.summary.mean_aoi, 3.41483, 5e-5);
}
