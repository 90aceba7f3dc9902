#include "test_support.hpp"

#include <gtest/gtest.h>

#include <sstream>
#include <string>
#include <vector>

using namespace mixreg;

namespace {

McConfig small_config(McStudy study)
{
  McConfig cfg;
  cfg.scenario = "WOn";
  cfg.pi0 = 0.7;
  cfg.n = 400;
  cfg.replicates = 12;
  cfg.seed = 5;
  cfg.study = study;
  cfg.bootstrap_replicates = 40;
  return cfg;
}

} // namespace

TEST(Mc, TruthColumns)
{
  const auto t = mc_truth(builtin_scenario("SOe", 0.3, 10, 1));
  EXPECT_EQ(t[0], 1.0);
  EXPECT_EQ(t[1], 0.5);
  EXPECT_EQ(t[2], 0.3);
  EXPECT_EQ(t[3], 0.1);
  EXPECT_EQ(t[4], 0.5);
  EXPECT_EQ(t[5], 0.9);
}

TEST(Mc, SeedsAreDistinctPerReplicate)
{
  McConfig cfg;
  EXPECT_NE(replicate_data_seed(cfg, 0), replicate_data_seed(cfg, 1));
  EXPECT_NE(replicate_data_seed(cfg, 0), replicate_bootstrap_seed(cfg, 0));
  cfg.reuse_seed = true;
  EXPECT_EQ(replicate_data_seed(cfg, 0), replicate_data_seed(cfg, 7));
}

TEST(Mc, BiasStudyShape)
{
  const auto r = run_bias_study(small_config(McStudy::Bias));
  EXPECT_EQ(r.outcomes.size(), 12u);
  EXPECT_FALSE(r.miss_rate.has_value());
  for (const auto& c : r.columns) {
    if (r.invalid < 11) {
      EXPECT_TRUE(c.bias.has_value());
      EXPECT_TRUE(c.sd.has_value());
    }
    EXPECT_FALSE(c.sqrt_n_mean_se.has_value());
  }
}

TEST(Mc, ReusedSeedGivesZeroSpread)
{
  auto cfg = small_config(McStudy::Bias);
  cfg.reuse_seed = true;
  const auto r = run_bias_study(cfg);
  ASSERT_EQ(r.invalid, 0u);
  for (const auto& c : r.columns) {
    EXPECT_NEAR(*c.sd, 0.0, 1e-14);
  }
}

TEST(Mc, SummaryMatchesIndependentAggregation)
{
  const auto cfg = small_config(McStudy::StandardError);
  const auto r = run_se_study(cfg);
  std::vector<bool> mask;
  std::size_t valid = 0;
  for (const auto& o : r.outcomes) {
    mask.push_back(o.valid);
    valid += o.valid;
  }
  const auto again = summarize(cfg, r.outcomes, mask);
  for (std::size_t c = 0; c < kMcColumns; ++c) {
    EXPECT_EQ(*again.columns[c].bias, *r.columns[c].bias);
    long double mean = 0;
    long double se = 0;
    for (const auto& o : r.outcomes) {
      if (o.valid) {
        mean += o.estimate[c];
        se += o.se[c];
      }
    }
    mean /= valid;
    se /= valid;
    long double ss = 0;
    for (const auto& o : r.outcomes) {
      if (o.valid) {
        ss += (o.estimate[c] - mean) * (o.estimate[c] - mean);
      }
    }
    EXPECT_NEAR(*r.columns[c].bias, static_cast<double>(mean) - r.truth[c], 1e-12);
    EXPECT_NEAR(*r.columns[c].sd, std::sqrt(static_cast<double>(ss / (valid - 1))), 1e-12);
    EXPECT_NEAR(*r.columns[c].sqrt_n_mean_se, std::sqrt(400.0) * static_cast<double>(se), 1e-10);
  }
}

TEST(Mc, ReplicateIsReproducible)
{
  const auto cfg = small_config(McStudy::Coverage);
  const auto a = run_replicate(cfg, 3);
  const auto b = run_replicate(cfg, 3);
  EXPECT_EQ(a.estimate, b.estimate);
  EXPECT_EQ(a.halfwidth, b.halfwidth);
  EXPECT_EQ(a.miss, b.miss);
}

TEST(Mc, CoverageStudyReportsMissRate)
{
  const auto r = run_coverage_study(small_config(McStudy::Coverage));
  ASSERT_TRUE(r.miss_rate.has_value());
  EXPECT_GE(*r.miss_rate, 0.0);
  EXPECT_LE(*r.miss_rate, 1.0);
  for (const auto& o : r.outcomes) {
    if (o.valid) {
      EXPECT_EQ(o.miss, o.sup_deviation > o.halfwidth);
      EXPECT_GT(o.halfwidth, 0.0);
    }
  }
}

TEST(Mc, ThreadCountDoesNotChangeResults)
{
  auto cfg = small_config(McStudy::Bias);
  cfg.threads = 1;
  const auto a = run_bias_study(cfg);
  cfg.threads = 3;
  const auto b = run_bias_study(cfg);
  for (std::size_t c = 0; c < kMcColumns; ++c) {
    EXPECT_EQ(*a.columns[c].bias, *b.columns[c].bias);
    EXPECT_EQ(*a.columns[c].sd, *b.columns[c].sd);
  }
}

TEST(Mc, ConfigErrors)
{
  auto cfg = small_config(McStudy::Bias);
  cfg.replicates = 1;
  EXPECT_THROW((void)run_study(cfg), ConfigError);
  cfg = small_config(McStudy::Coverage);
  cfg.bootstrap_replicates = 5;
  EXPECT_THROW((void)run_study(cfg), ConfigError);
  cfg = small_config(McStudy::Bias);
  cfg.scenario = "ZZn";
  EXPECT_THROW((void)run_study(cfg), ConfigError);
}

TEST(Mc, TsvHasAllColumns)
{
  const auto r = run_bias_study(small_config(McStudy::Bias));
  std::ostringstream os;
  write_report_tsv(os, r);
  const std::string s = os.str();
  for (const char* name : kMcColumnNames) {
    EXPECT_NE(s.find(name), std::string::npos) << name;
  }
  EXPECT_NE(s.find("NA"), std::string::npos);
}
