#pragma once

#include <compare>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "rtsize/io.hpp"

namespace rtsize {

// A research unit: one scientific disciplinary sector (SDS) of one university.
struct UnitKey {
  std::string university_id;
  std::string sds_id;

  auto operator<=>(const UnitKey&) const = default;
};

struct AuthorRef {
  std::string author_id;
  std::optional<UnitKey> affiliation;  // nullopt = external co-author
  int position = 0;                    // 1-based byline index

  bool is_external() const { return !affiliation.has_value(); }
};

struct PublicationRecord {
  std::string pub_id;
  int year = 0;
  long long citations = 0;
  std::vector<std::string> categories;
  std::vector<AuthorRef> authors;  // byline order, positions 1..N
  bool life_science = false;
};

struct StaffRecord {
  std::string scientist_id;
  std::string university_id;
  std::string sds_id;
  std::map<int, double> headcount_by_year;  // year -> fraction of year employed

  UnitKey unit() const { return {university_id, sds_id}; }
};

struct Period {
  int first_year = 0;
  int last_year = -1;

  bool empty() const { return last_year < first_year; }
  int years() const { return empty() ? 0 : last_year - first_year + 1; }
  bool contains(int year) const { return year >= first_year && year <= last_year; }
};

struct Dataset {
  std::vector<PublicationRecord> publications;
  std::vector<StaffRecord> roster;
  Period period;
  std::set<std::string> category_lifesci;
};

// Settings read from the key = value config file that the dataset needs.
struct DatasetConfig {
  Period period{2004, 2008};
  std::set<std::string> life_science_categories;
  std::filesystem::path publications;
  std::filesystem::path roster;
  std::filesystem::path uda_map;
};

DatasetConfig dataset_config_from(const KeyValueFile& kv);

std::vector<PublicationRecord> load_publications(const std::filesystem::path& path,
                                                 const std::set<std::string>& life_science);
// Parses JSONL text; `origin` prefixes error messages.
std::vector<PublicationRecord> parse_publications(const std::string& text,
                                                  const std::set<std::string>& life_science,
                                                  const std::string& origin = "<jsonl>");
std::vector<StaffRecord> load_roster(const std::filesystem::path& path);

std::string serialize_publications(const std::vector<PublicationRecord>& pubs);
std::string serialize_roster(const std::vector<StaffRecord>& roster);
std::string serialize_config(const Dataset& dataset, const std::string& uda_map_file = {});

Dataset load_dataset(const DatasetConfig& config);

struct ValidationIssue {
  enum class Kind { OrphanedAffiliation, OutOfPeriod, NoBaselineSupport };
  Kind kind;
  std::string pub_id;
  std::string detail;
};

std::string to_string(ValidationIssue::Kind kind);

struct ValidationReport {
  std::vector<ValidationIssue> issues;

  bool empty() const { return issues.empty(); }
  std::size_t count(ValidationIssue::Kind kind) const;
};

class Baselines;

// Reports problems without touching the data. When `baselines` is given
// (e.g. imported from baselines.csv) every (year, category) of an in-period
// publication must be covered by it.
ValidationReport validate(const Dataset& dataset, const Baselines* baselines = nullptr);

struct StaffAverage {
  double rs = 0.0;
  bool unknown_unit = false;
};

// Average research staff of a unit over the dataset period: summed yearly
// fractions divided by the number of years.
StaffAverage average_research_staff(const Dataset& dataset, const std::string& university,
                                    const std::string& sds);

// Same quantity for every unit that appears in the roster.
std::map<UnitKey, double> average_research_staff_by_unit(const Dataset& dataset);

}  // namespace rtsize
