#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "rtsize/pipeline.hpp"
#include "rtsize/synth.hpp"
#include "test_util.hpp"

using namespace rtsize;

namespace {

struct U {
  double size, prod, top = 0.0, inactive = 0.0;
};

SdsFrame make_frame(const std::string& sds, const std::vector<U>& units) {
  SdsFrame f;
  f.sds_id = sds;
  std::vector<double> size, prod, inactive;
  for (std::size_t i = 0; i < units.size(); ++i) {
    char id[16];
    std::snprintf(id, sizeof id, "U%03zu", i);
    f.units.push_back({id, units[i].size, units[i].prod, units[i].top, units[i].inactive, 5, 3});
    size.push_back(units[i].size);
    prod.push_back(units[i].prod);
    inactive.push_back(units[i].inactive);
  }
  f.size_median = median(size);
  f.productivity_median = median(prod);
  f.inactive_share_median = median(inactive);
  return f;
}

// Units with distinct sizes 1..n; `high` marks the high-productivity units.
// Productivity is 1 + tiny jitter for low units and 2 + jitter for high ones.
SdsFrame step_frame(const std::string& sds, const std::vector<bool>& high) {
  std::vector<U> units;
  for (std::size_t i = 0; i < high.size(); ++i)
    units.push_back({static_cast<double>(i + 1), (high[i] ? 2.0 : 1.0) + 0.001 * static_cast<double>(i % 7)});
  return make_frame(sds, units);
}

// 48 units; sizes 1..24 Small with 15 low then 9 high, sizes 25..48 Large
// with 9 low then 15 high: productivity x size is (15, 9, 9, 15).
SdsFrame organic_chemistry_frame() {
  std::vector<bool> high;
  for (int i = 0; i < 15; ++i) high.push_back(false);
  for (int i = 0; i < 9; ++i) high.push_back(true);
  for (int i = 0; i < 9; ++i) high.push_back(false);
  for (int i = 0; i < 15; ++i) high.push_back(true);
  return step_frame("ORGCHEM", high);
}

// 47 units, productivity x size (14, 10, 10, 13), interleaved.
SdsFrame numerical_analysis_frame() {
  std::vector<bool> high;
  for (int i = 0; i < 24; ++i) high.push_back(i % 12 >= 7);   // 14 low, 10 high among Small
  for (int i = 0; i < 23; ++i) high.push_back(i % 2 == 1 || i == 20 || i == 22);  // 10 low, 13 high
  return step_frame("NUMAN", high);
}

AnalysisConfig config_with(double alpha = 0.1) {
  AnalysisConfig c;
  c.alpha = alpha;
  return c;
}

World small_world(std::uint64_t seed, int n_sds = 24) {
  WorldConfig wc;
  wc.n_sds = n_sds;
  wc.n_universities = 30;
  wc.seed = seed;
  for (int i = 0; i < n_sds; i += 3) wc.beta_overrides[sds_name(i)] = 1.6;
  return generate_world(wc);
}

}  // namespace

TEST(QualityScreen, BelowMinUnitsIsNotRun) {
  const auto f = make_frame("S", {{1, 1}, {2, 2}, {3, 3}, {4, 4}, {5, 5}});
  const auto s = stage_quality_screen(f, config_with());
  EXPECT_TRUE(s.not_run);
  EXPECT_TRUE(s.screened_out);
  const auto r = analyze_frame(f, "X", config_with());
  EXPECT_EQ(r.final_class, FinalClass::Excluded);
  EXPECT_FALSE(r.size_prod_assoc.has_value());
}

TEST(QualityScreen, TopScientistsInLargeUnitsScreensOut) {
  std::vector<U> units;
  for (int i = 1; i <= 30; ++i) units.push_back({double(i), 1.0, i > 15 ? 0.4 : 0.05, 0.1});
  const auto s = stage_quality_screen(make_frame("S", units), config_with());
  EXPECT_TRUE(s.top.significant);
  EXPECT_TRUE(s.screened_out);
  EXPECT_GT(s.top.tau_b, 0.0);
}

TEST(QualityScreen, InactiveConcentrationAlsoScreensOut) {
  std::vector<U> units;
  for (int i = 1; i <= 30; ++i) units.push_back({double(i), 1.0, 0.1, i <= 15 ? 0.5 : 0.05});
  const auto s = stage_quality_screen(make_frame("S", units), config_with());
  EXPECT_FALSE(s.top.significant);
  EXPECT_TRUE(s.inactive.significant);
  EXPECT_LT(s.inactive.tau_b, 0.0);
  EXPECT_TRUE(s.screened_out);
}

TEST(SizeProductivity, PublishedTables) {
  const auto num = stage_size_productivity(numerical_analysis_frame(), config_with());
  EXPECT_EQ(num.table.a, 14);
  EXPECT_EQ(num.table.b, 10);
  EXPECT_EQ(num.table.c, 10);
  EXPECT_EQ(num.table.d, 13);
  EXPECT_NEAR(num.p_value, 0.308, 0.001);
  EXPECT_FALSE(num.significant);

  const auto org = stage_size_productivity(organic_chemistry_frame(), config_with());
  EXPECT_EQ(org.table.a, 15);
  EXPECT_EQ(org.table.d, 15);
  EXPECT_NEAR(org.p_value, 0.082, 0.001);
  EXPECT_TRUE(org.significant);
  EXPECT_EQ(org.tau_b, 0.25);
}

TEST(SizeProductivity, IndependentFrameHasZeroG) {
  std::vector<bool> high;
  for (int i = 0; i < 40; ++i) high.push_back(i % 2 == 0);
  const auto r = stage_size_productivity(step_frame("S", high), config_with());
  EXPECT_NEAR(r.g_statistic, 0.0, 1e-12);
}

TEST(Confirm, StepUpIsIncreasing) {
  const auto c = stage_confirm(organic_chemistry_frame(), config_with(), 11);
  ASSERT_TRUE(c.npc_p.has_value());
  EXPECT_LT(*c.npc_p, 0.1);
  EXPECT_EQ(c.loess.verdict, LoessVerdict::Increasing);
}

TEST(Confirm, FlatFrameIsConstant) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> z(0.0, 0.05);
  std::vector<U> units;
  for (int i = 1; i <= 40; ++i) units.push_back({double(i), 1.0 + z(rng)});
  const auto c = stage_confirm(make_frame("FLAT", units), config_with(), 5);
  EXPECT_EQ(c.loess.verdict, LoessVerdict::Constant);
  EXPECT_GT(*c.npc_p, 0.1);
}

TEST(Confirm, TooFewUnitsNotRun) {
  const auto c = stage_confirm(make_frame("S", {{1, 1}, {2, 1}, {3, 1}, {4, 1}, {5, 1}}), config_with(), 1);
  EXPECT_FALSE(c.npc_p.has_value());
  EXPECT_EQ(c.loess.verdict, LoessVerdict::NotRun);
}

TEST(Confirm, OutlierRemovalRevealsRisingTrend) {
  // Gentle rise plus three small, very productive units that drag the left
  // end of the curve up.
  std::vector<U> units;
  for (int i = 1; i <= 30; ++i) units.push_back({double(i), 1.0 + 0.03 * i + 0.02 * ((i * 7) % 5 - 2)});
  units[1].prod = 5.0;
  units[3].prod = 5.5;
  units[5].prod = 4.8;
  const auto c = stage_confirm(make_frame("FIG3", units), config_with(), 9);
  EXPECT_EQ(c.loess_raw.verdict, LoessVerdict::Constant);
  EXPECT_EQ(c.loess.verdict, LoessVerdict::Increasing);
  ASSERT_TRUE(c.loess.fit.has_value());
  EXPECT_EQ(c.loess.fit->excluded_outliers, (std::vector<std::size_t>{1, 3, 5}));
}

TEST(FinalClass, RulesCombineConfirmations) {
  SdsResult r;
  AssociationResult a;
  a.significant = true;
  a.tau_b = 0.2;
  r.size_prod_assoc = a;
  r.npc_p = 0.5;
  r.loess_verdict = LoessVerdict::Increasing;
  AnalysisConfig c;
  EXPECT_EQ(final_class_of(r, c), FinalClass::IncreasingReturns);
  c.verdict_rule = VerdictRule::DependenceAndNpc;
  EXPECT_EQ(final_class_of(r, c), FinalClass::ConstantReturns);
  c.verdict_rule = VerdictRule::DependenceAndBoth;
  EXPECT_EQ(final_class_of(r, c), FinalClass::ConstantReturns);
  c.verdict_rule = VerdictRule::DependenceOnly;
  EXPECT_EQ(final_class_of(r, c), FinalClass::IncreasingReturns);

  r.size_prod_assoc->tau_b = -0.2;
  EXPECT_EQ(final_class_of(r, c), FinalClass::ConstantReturns);
  r.screened_out = true;
  EXPECT_EQ(final_class_of(r, c), FinalClass::Excluded);

  EXPECT_EQ(parse_verdict_rule(to_string(VerdictRule::DependenceAndLoess)), VerdictRule::DependenceAndLoess);
  EXPECT_THROW(parse_verdict_rule("majority"), std::invalid_argument);
}

TEST(AnalyzeFrames, OrganicChemistryInIncreasingList) {
  AnalysisConfig c;
  c.uda_of = {{"ORGCHEM", "CHEMISTRY"}};
  const auto report = analyze_frames({organic_chemistry_frame(), numerical_analysis_frame()}, c);
  ASSERT_EQ(report.increasing.size(), 1u);
  EXPECT_EQ(report.increasing[0].sds_id, "ORGCHEM");
  EXPECT_EQ(report.increasing[0].uda_id, "CHEMISTRY");
  EXPECT_EQ(report.increasing[0].tau_b, 0.25);
  EXPECT_EQ(report.increasing[0].stars, "*");
  EXPECT_EQ(report.sds[0].sds_id, "NUMAN");
  EXPECT_EQ(report.sds[0].uda_id, "UNASSIGNED");
  EXPECT_EQ(report.sds[0].final_class, FinalClass::ConstantReturns);
}

TEST(RunAnalysis, EmptyDatasetIsAnError) {
  EXPECT_THROW(run_analysis(Dataset{}, AnalysisConfig{}), DataError);
}

TEST(RunAnalysis, SingleSdsDatasetReproducesTableEightPattern) {
  // Unit i has i+1 full-time scientists, each with one solo paper cited
  // 1000 times in low units and 2000 times in high units. Nobody is above
  // the percentile (so no top scientists) and nobody is inactive.
  Dataset ds;
  ds.period = {2004, 2008};
  const SdsFrame ref = organic_chemistry_frame();
  for (std::size_t i = 0; i < ref.units.size(); ++i) {
    const std::string uni = ref.units[i].university_id;
    const long long cites = ref.units[i].productivity > 1.5 ? 2000 : 1000;
    for (std::size_t k = 0; k <= i; ++k) {
      StaffRecord s{uni + "-" + std::to_string(k), uni, "ORGCHEM", {}};
      for (int y = 2004; y <= 2008; ++y) s.headcount_by_year[y] = 1.0;
      ds.roster.push_back(s);
      PublicationRecord p;
      p.pub_id = "P" + s.scientist_id;
      p.year = 2006;
      p.citations = cites;
      p.categories = {"C"};
      p.authors = {{s.scientist_id, UnitKey{uni, "ORGCHEM"}, 1}};
      ds.publications.push_back(p);
    }
  }
  const auto report = run_analysis(ds, AnalysisConfig{});
  ASSERT_EQ(report.sds.size(), 1u);
  const auto& r = report.sds[0];
  ASSERT_TRUE(r.size_prod_assoc.has_value());
  EXPECT_EQ(r.size_prod_assoc->table.a, 15);
  EXPECT_EQ(r.size_prod_assoc->table.d, 15);
  EXPECT_FALSE(r.screened_out);
  ASSERT_EQ(report.increasing.size(), 1u);
  EXPECT_EQ(report.increasing[0].tau_b, 0.25);
}

TEST(RunAnalysis, DeterministicAndIndependentOfJobs) {
  const World w = small_world(3);
  AnalysisConfig c;
  c.uda_of = w.truth.uda_of;
  const auto a = run_analysis(w.dataset, c);
  const auto b = run_analysis(w.dataset, c);
  c.jobs = 4;
  const auto d = run_analysis(w.dataset, c);
  EXPECT_EQ(sds_results_csv(a.sds), sds_results_csv(b.sds));
  EXPECT_EQ(sds_results_csv(a.sds), sds_results_csv(d.sds));
  EXPECT_EQ(report_summary_csv(a.summary), report_summary_csv(d.summary));
  EXPECT_EQ(report_increasing_csv(a.increasing), report_increasing_csv(d.increasing));

  rtsize::testing::TempDir one, four;
  write_report(a, one.path());
  write_report(d, four.path());
  for (const auto& entry : std::filesystem::recursive_directory_iterator(one.path())) {
    if (!entry.is_regular_file()) continue;
    const auto rel = std::filesystem::relative(entry.path(), one.path());
    EXPECT_EQ(rtsize::testing::read_file(entry.path()), rtsize::testing::read_file(four.path() / rel))
        << rel;
  }
}

TEST(RunAnalysis, AccountingAndSigns) {
  const World w = small_world(5, 30);
  AnalysisConfig c;
  c.uda_of = w.truth.uda_of;
  const auto report = run_analysis(w.dataset, c);
  int excluded = 0, analyzed = 0;
  for (const auto& r : report.sds) {
    (r.final_class == FinalClass::Excluded ? excluded : analyzed)++;
    if (r.final_class == FinalClass::IncreasingReturns) EXPECT_GT(r.size_prod_assoc->tau_b, 0.0);
    EXPECT_EQ(r.screened_out, r.final_class == FinalClass::Excluded);
  }
  EXPECT_EQ(excluded + analyzed, 30);

  for (const char* analysis : {"top", "inactive", "size_prod"}) {
    int n = 0, sig = 0;
    const UdaSummaryRow* total = nullptr;
    for (const auto& row : report.summary) {
      if (row.analysis != analysis) continue;
      if (row.uda_id == "TOTAL") {
        total = &row;
      } else {
        n += row.n_sds;
        sig += row.n_significant;
      }
    }
    ASSERT_NE(total, nullptr);
    EXPECT_EQ(total->n_sds, n);
    EXPECT_EQ(total->n_significant, sig);
    EXPECT_EQ(n, 30);
  }
}

TEST(RunAnalysis, RaisingAlphaNeverShrinksSignificance) {
  const World w = small_world(8);
  std::vector<std::set<std::string>> previous(3);
  for (double alpha : {0.01, 0.05, 0.1, 0.2, 0.3}) {
    const auto report = run_analysis(w.dataset, config_with(alpha));
    std::vector<std::set<std::string>> sig(3);
    for (const auto& r : report.sds) {
      if (r.top_assoc.significant) sig[0].insert(r.sds_id);
      if (r.inactive_assoc.significant) sig[1].insert(r.sds_id);
      if (r.size_prod_assoc && r.size_prod_assoc->significant) sig[2].insert(r.sds_id);
    }
    for (int k = 0; k < 3; ++k) {
      for (const auto& s : previous[k]) EXPECT_TRUE(sig[k].count(s)) << alpha << " " << s;
    }
    previous = sig;
  }
}

TEST(Report, CsvRoundTripAndPlots) {
  AnalysisConfig c;
  const auto report = analyze_frames({organic_chemistry_frame()}, c);
  rtsize::testing::TempDir dir;
  write_report(report, dir.path());
  const auto summary = load_report_summary(dir / "report_summary.csv");
  EXPECT_EQ(report_summary_csv(summary), report_summary_csv(report.summary));
  const auto inc = load_report_increasing(dir / "report_increasing.csv");
  EXPECT_EQ(report_increasing_csv(inc), report_increasing_csv(report.increasing));
  EXPECT_TRUE(std::filesystem::exists(dir / "plots" / "ORGCHEM_box.csv"));
  const std::string loess = rtsize::testing::read_file(dir / "plots" / "ORGCHEM_loess.csv");
  EXPECT_EQ(loess.substr(0, 21), "x,fitted,is_outlier\n1");
  EXPECT_EQ(significance_stars(0.03), "**");
  EXPECT_EQ(significance_stars(0.07), "*");
  EXPECT_EQ(significance_stars(0.2), "");
  EXPECT_EQ(plot_file_stem("ING-IND/14"), "ING-IND_14");
}

TEST(Seeds, DerivedPerSds) {
  EXPECT_EQ(derive_seed(1, "A"), derive_seed(1, "A"));
  EXPECT_NE(derive_seed(1, "A"), derive_seed(1, "B"));
  EXPECT_NE(derive_seed(1, "A"), derive_seed(2, "A"));
}
