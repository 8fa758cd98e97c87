#include <gtest/gtest.h>

#include "rtsize/dataset.hpp"
#include "rtsize/scoring.hpp"
#include "test_util.hpp"

using namespace rtsize;
using rtsize::testing::TempDir;
using rtsize::testing::fixture_dir;

namespace {

Dataset fixture() {
  return load_dataset(dataset_config_from(KeyValueFile::load(fixture_dir() / "config.toml")));
}

std::string pub_line(const std::string& id, const std::string& authors) {
  return R"({"pub_id":")" + id + R"(","year":2005,"citations":3,"categories":["MATH"],"authors":)" +
         authors + "}\n";
}

}  // namespace

TEST(LoadPublications, ParsesAuthorsAndExternal) {
  const auto pubs = parse_publications(
      pub_line("P1", R"([{"author_id":"a1","university_id":"U1","sds_id":"S1","position":1},)"
                     R"({"author_id":"a2","university_id":null,"sds_id":null,"position":2}])"),
      {});
  ASSERT_EQ(pubs.size(), 1u);
  ASSERT_EQ(pubs[0].authors.size(), 2u);
  EXPECT_EQ(pubs[0].authors[0].position, 1);
  EXPECT_EQ(pubs[0].authors[1].position, 2);
  EXPECT_FALSE(pubs[0].authors[0].is_external());
  EXPECT_TRUE(pubs[0].authors[1].is_external());
  EXPECT_EQ(pubs[0].authors[0].affiliation->university_id, "U1");
}

TEST(LoadPublications, RejectsEmptyAuthors) {
  try {
    parse_publications(pub_line("P1", "[]"), {}, "pubs.jsonl");
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("pubs.jsonl:1"), std::string::npos);
    EXPECT_NE(msg.find("authors"), std::string::npos);
  }
}

TEST(LoadPublications, ErrorsNameLineAndField) {
  const std::string good = pub_line("P1", R"([{"author_id":"a","university_id":null,"sds_id":null,"position":1}])");
  const std::string bad = R"({"pub_id":"P2","year":2005,"citations":-1,"categories":["M"],"authors":[]})";
  try {
    parse_publications(good + bad + "\n", {}, "f");
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("f:2: field 'citations'"), std::string::npos) << e.what();
  }
  EXPECT_THROW(parse_publications(good + good, {}), DataError);  // duplicate pub_id
  EXPECT_THROW(parse_publications("{not json}\n", {}), DataError);
  EXPECT_THROW(parse_publications(pub_line("P3", R"([{"author_id":"a","university_id":null,"sds_id":null,"position":2}])"), {}),
               DataError);  // positions must start at 1
}

TEST(LoadPublications, FixturePreservesFileOrderAndLifeScienceFlag) {
  const Dataset ds = fixture();
  ASSERT_EQ(ds.publications.size(), 10u);
  for (std::size_t i = 0; i < ds.publications.size(); ++i) {
    char id[8];
    std::snprintf(id, sizeof id, "P%02zu", i + 1);
    EXPECT_EQ(ds.publications[i].pub_id, id);
  }
  EXPECT_FALSE(ds.publications[0].life_science);
  EXPECT_TRUE(ds.publications[6].life_science);
  EXPECT_TRUE(ds.publications[8].life_science);  // BIO + MATH
}

TEST(LoadRoster, MergesYearsAndChecksBounds) {
  TempDir dir;
  const auto ok = dir.write("r.csv",
                            "scientist_id,university_id,sds_id,year,fraction\n"
                            "s1,U1,S1,2004,1.0\ns1,U1,S1,2005,1.0\ns1,U1,S1,2006,1\n"
                            "s1,U1,S1,2007,1\ns1,U1,S1,2008,1\ns2,U1,S1,2004,0.5\n");
  const auto roster = load_roster(ok);
  ASSERT_EQ(roster.size(), 2u);
  EXPECT_EQ(roster[0].headcount_by_year.size(), 5u);
  for (const auto& [y, f] : roster[0].headcount_by_year) EXPECT_EQ(f, 1.0);

  EXPECT_THROW(load_roster(dir.write("bad.csv", "scientist_id,university_id,sds_id,year,fraction\n"
                                                "s1,U1,S1,2004,1.5\n")),
               DataError);
  EXPECT_THROW(load_roster(dir.write("dup.csv", "scientist_id,university_id,sds_id,year,fraction\n"
                                                "s1,U1,S1,2004,1\ns1,U1,S1,2004,0.5\n")),
               DataError);
  EXPECT_THROW(load_roster(dir.write("hdr.csv", "id,uni,sds,year,fraction\n")), DataError);
  EXPECT_THROW(load_roster(dir.write("move.csv", "scientist_id,university_id,sds_id,year,fraction\n"
                                                 "s1,U1,S1,2004,1\ns1,U2,S1,2005,1\n")),
               DataError);
}

TEST(Validate, FixtureIsClean) { EXPECT_TRUE(validate(fixture()).empty()); }

TEST(Validate, ReportsOrphansAndOutOfPeriod) {
  Dataset ds = fixture();
  const std::size_t before = ds.publications.size();
  PublicationRecord orphan = ds.publications[0];
  orphan.pub_id = "ORPHAN";
  orphan.authors[1].affiliation = UnitKey{"U9", "S9"};
  ds.publications.push_back(orphan);
  PublicationRecord late = ds.publications[1];
  late.pub_id = "LATE";
  late.year = 2012;
  ds.publications.push_back(late);

  const Dataset copy = ds;
  const ValidationReport r = validate(ds);
  EXPECT_EQ(r.count(ValidationIssue::Kind::OrphanedAffiliation), 1u);
  EXPECT_EQ(r.count(ValidationIssue::Kind::OutOfPeriod), 1u);
  EXPECT_EQ(ds.publications.size(), before + 2);
  EXPECT_EQ(serialize_publications(ds.publications), serialize_publications(copy.publications));
}

TEST(Validate, ReportsMissingBaselineCells) {
  const Dataset ds = fixture();
  Baselines partial;
  partial.set(2004, "MATH", {2.0, BaselineFallback::None, 3});
  const auto r = validate(ds, &partial);
  EXPECT_GT(r.count(ValidationIssue::Kind::NoBaselineSupport), 0u);
  const Baselines full = compute_baselines(ds);
  EXPECT_TRUE(validate(ds, &full).empty());
}

TEST(AverageResearchStaff, SimpleCases) {
  Dataset ds;
  ds.period = {2004, 2008};
  for (int i = 0; i < 3; ++i) {
    StaffRecord s{"s" + std::to_string(i), "U1", "S1", {}};
    for (int y = 2004; y <= 2008; ++y) s.headcount_by_year[y] = 1.0;
    ds.roster.push_back(s);
  }
  ds.roster.push_back({"t", "U2", "S1", {{2004, 1.0}, {2005, 1.0}}});
  EXPECT_DOUBLE_EQ(average_research_staff(ds, "U1", "S1").rs, 3.0);
  EXPECT_DOUBLE_EQ(average_research_staff(ds, "U2", "S1").rs, 0.4);
  const auto unknown = average_research_staff(ds, "U7", "S1");
  EXPECT_EQ(unknown.rs, 0.0);
  EXPECT_TRUE(unknown.unknown_unit);
}

TEST(AverageResearchStaff, MixedFractionFixtureMatchesHandSum) {
  const Dataset ds = fixture();
  // U1/S1: a1 5 x 1.0, a2 3 x 1.0 + 0.5  -> 8.5 / 5
  EXPECT_DOUBLE_EQ(average_research_staff(ds, "U1", "S1").rs, 1.7);
  // U2/S1: a3 5 x 1.0, a4 4 x 0.75      -> 8.0 / 5
  EXPECT_DOUBLE_EQ(average_research_staff(ds, "U2", "S1").rs, 1.6);
  // U1/S2: b1 5 x 1.0, b2 3 x 0.5       -> 6.5 / 5
  EXPECT_DOUBLE_EQ(average_research_staff(ds, "U1", "S2").rs, 1.3);
  const auto all = average_research_staff_by_unit(ds);
  EXPECT_DOUBLE_EQ(all.at({"U1", "S1"}), 1.7);
}

TEST(AverageResearchStaff, LinearInRoster) {
  Dataset ds = fixture();
  const auto once = average_research_staff_by_unit(ds);
  Dataset doubled = ds;
  for (auto s : ds.roster) {
    s.scientist_id += "_copy";
    doubled.roster.push_back(s);
  }
  const auto twice = average_research_staff_by_unit(doubled);
  for (const auto& [unit, rs] : once) EXPECT_NEAR(twice.at(unit), 2.0 * rs, 1e-12);
}

TEST(Serialization, LoadSerializeLoadIsIdentity) {
  const Dataset ds = fixture();
  TempDir dir;
  write_text_file(dir / "publications.jsonl", serialize_publications(ds.publications));
  write_text_file(dir / "roster.csv", serialize_roster(ds.roster));
  write_text_file(dir / "config.toml", serialize_config(ds));
  const Dataset again =
      load_dataset(dataset_config_from(KeyValueFile::load(dir / "config.toml")));
  EXPECT_EQ(serialize_publications(again.publications), serialize_publications(ds.publications));
  EXPECT_EQ(serialize_roster(again.roster), serialize_roster(ds.roster));
  EXPECT_EQ(again.category_lifesci, ds.category_lifesci);
  EXPECT_EQ(again.period.first_year, 2004);
  EXPECT_EQ(again.period.last_year, 2008);
}
