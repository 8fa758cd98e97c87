#include "rtsize/dataset.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "rtsize/scoring.hpp"

namespace rtsize {

namespace {

using nlohmann::json;

std::string shortest(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

[[noreturn]] void field_error(const std::string& origin, std::size_t line, const std::string& field,
                              const std::string& what) {
  throw DataError(origin + ":" + std::to_string(line) + ": field '" + field + "': " + what);
}

const json& require(const json& obj, const char* key, const std::string& origin, std::size_t line) {
  const auto it = obj.find(key);
  if (it == obj.end()) field_error(origin, line, key, "missing");
  return *it;
}

std::string require_string(const json& obj, const char* key, const std::string& origin,
                           std::size_t line) {
  const json& v = require(obj, key, origin, line);
  if (!v.is_string()) field_error(origin, line, key, "expected string");
  std::string s = v.get<std::string>();
  if (s.empty()) field_error(origin, line, key, "empty string");
  return s;
}

long long require_int(const json& obj, const char* key, const std::string& origin,
                      std::size_t line) {
  const json& v = require(obj, key, origin, line);
  if (!v.is_number_integer()) field_error(origin, line, key, "expected integer");
  return v.get<long long>();
}

PublicationRecord parse_record(const json& obj, const std::set<std::string>& life_science,
                               const std::string& origin, std::size_t line) {
  if (!obj.is_object()) throw DataError(origin + ":" + std::to_string(line) + ": expected object");
  PublicationRecord pub;
  pub.pub_id = require_string(obj, "pub_id", origin, line);
  pub.year = static_cast<int>(require_int(obj, "year", origin, line));
  pub.citations = require_int(obj, "citations", origin, line);
  if (pub.citations < 0) field_error(origin, line, "citations", "negative");

  const json& cats = require(obj, "categories", origin, line);
  if (!cats.is_array() || cats.empty()) field_error(origin, line, "categories", "expected non-empty array");
  for (const auto& c : cats) {
    if (!c.is_string() || c.get<std::string>().empty())
      field_error(origin, line, "categories", "expected non-empty strings");
    pub.categories.push_back(c.get<std::string>());
  }

  const json& authors = require(obj, "authors", origin, line);
  if (!authors.is_array() || authors.empty()) field_error(origin, line, "authors", "expected non-empty array");
  for (const auto& a : authors) {
    if (!a.is_object()) field_error(origin, line, "authors", "expected objects");
    AuthorRef ref;
    ref.author_id = require_string(a, "author_id", origin, line);
    ref.position = static_cast<int>(require_int(a, "position", origin, line));
    const auto uni = a.find("university_id");
    const auto sds = a.find("sds_id");
    const bool has_uni = uni != a.end() && !uni->is_null();
    const bool has_sds = sds != a.end() && !sds->is_null();
    if (has_uni != has_sds)
      field_error(origin, line, "authors.sds_id", "university_id and sds_id must both be set or both null");
    if (has_uni) {
      if (!uni->is_string() || !sds->is_string() || uni->get<std::string>().empty() ||
          sds->get<std::string>().empty())
        field_error(origin, line, "authors.university_id", "expected non-empty strings");
      ref.affiliation = UnitKey{uni->get<std::string>(), sds->get<std::string>()};
    }
    pub.authors.push_back(std::move(ref));
  }
  std::stable_sort(pub.authors.begin(), pub.authors.end(),
                   [](const AuthorRef& x, const AuthorRef& y) { return x.position < y.position; });
  for (std::size_t i = 0; i < pub.authors.size(); ++i) {
    if (pub.authors[i].position != static_cast<int>(i + 1))
      field_error(origin, line, "authors.position", "positions must form 1..N without gaps");
  }
  for (const auto& c : pub.categories) {
    if (life_science.count(c)) {
      pub.life_science = true;
      break;
    }
  }
  return pub;
}

}  // namespace

DatasetConfig dataset_config_from(const KeyValueFile& kv) {
  DatasetConfig cfg;
  cfg.period.first_year = static_cast<int>(kv.get_int("period_start", cfg.period.first_year));
  cfg.period.last_year = static_cast<int>(kv.get_int("period_end", cfg.period.last_year));
  if (cfg.period.empty()) throw DataError("config: empty period");
  for (auto& c : kv.get_list("life_science")) cfg.life_science_categories.insert(c);
  cfg.publications = kv.get_path("publications");
  cfg.roster = kv.get_path("roster");
  cfg.uda_map = kv.get_path("uda_map");
  return cfg;
}

std::vector<PublicationRecord> parse_publications(const std::string& text,
                                                  const std::set<std::string>& life_science,
                                                  const std::string& origin) {
  std::vector<PublicationRecord> pubs;
  std::unordered_set<std::string> seen;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw DataError(origin + ":" + std::to_string(line_no) + ": malformed JSON: " + e.what());
    }
    PublicationRecord pub = parse_record(obj, life_science, origin, line_no);
    if (!seen.insert(pub.pub_id).second)
      field_error(origin, line_no, "pub_id", "duplicate pub_id '" + pub.pub_id + "'");
    pubs.push_back(std::move(pub));
  }
  return pubs;
}

std::vector<PublicationRecord> load_publications(const std::filesystem::path& path,
                                                 const std::set<std::string>& life_science) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_publications(ss.str(), life_science, path.string());
}

std::vector<StaffRecord> load_roster(const std::filesystem::path& path) {
  const CsvTable table =
      read_csv(path, {"scientist_id", "university_id", "sds_id", "year", "fraction"});
  std::vector<StaffRecord> roster;
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const std::string where = path.string() + ":" + std::to_string(table.line_numbers[r]);
    const std::string id = trim(row[0]), uni = trim(row[1]), sds = trim(row[2]);
    if (id.empty() || uni.empty() || sds.empty()) throw DataError(where + ": empty identifier");
    const int year = static_cast<int>(parse_int(row[3], where + ": field 'year'"));
    const double fraction = parse_double(row[4], where + ": field 'fraction'");
    if (fraction < 0.0 || fraction > 1.0)
      throw DataError(where + ": field 'fraction': " + trim(row[4]) + " outside [0,1]");

    auto [it, inserted] = index.try_emplace(id, roster.size());
    if (inserted) roster.push_back(StaffRecord{id, uni, sds, {}});
    StaffRecord& rec = roster[it->second];
    if (rec.university_id != uni || rec.sds_id != sds)
      throw DataError(where + ": scientist '" + id + "' assigned to more than one unit");
    if (!rec.headcount_by_year.emplace(year, fraction).second)
      throw DataError(where + ": duplicate (scientist, year) = (" + id + ", " +
                      std::to_string(year) + ")");
  }
  return roster;
}

std::string serialize_publications(const std::vector<PublicationRecord>& pubs) {
  std::string out;
  for (const auto& pub : pubs) {
    nlohmann::ordered_json obj;
    obj["pub_id"] = pub.pub_id;
    obj["year"] = pub.year;
    obj["citations"] = pub.citations;
    obj["categories"] = pub.categories;
    auto authors = nlohmann::ordered_json::array();
    for (const auto& a : pub.authors) {
      nlohmann::ordered_json ja;
      ja["author_id"] = a.author_id;
      if (a.affiliation) {
        ja["university_id"] = a.affiliation->university_id;
        ja["sds_id"] = a.affiliation->sds_id;
      } else {
        ja["university_id"] = nullptr;
        ja["sds_id"] = nullptr;
      }
      ja["position"] = a.position;
      authors.push_back(std::move(ja));
    }
    obj["authors"] = std::move(authors);
    out += obj.dump();
    out += '\n';
  }
  return out;
}

std::string serialize_roster(const std::vector<StaffRecord>& roster) {
  std::string out = "scientist_id,university_id,sds_id,year,fraction\n";
  for (const auto& s : roster) {
    for (const auto& [year, fraction] : s.headcount_by_year) {
      out += csv_escape(s.scientist_id) + ',' + csv_escape(s.university_id) + ',' +
             csv_escape(s.sds_id) + ',' + std::to_string(year) + ',' + shortest(fraction) + '\n';
    }
  }
  return out;
}

std::string serialize_config(const Dataset& dataset, const std::string& uda_map_file) {
  std::string out;
  out += "period_start = " + std::to_string(dataset.period.first_year) + "\n";
  out += "period_end = " + std::to_string(dataset.period.last_year) + "\n";
  out += "life_science = \"";
  bool first = true;
  for (const auto& c : dataset.category_lifesci) {
    out += (first ? "" : ",") + c;
    first = false;
  }
  out += "\"\n";
  out += "publications = publications.jsonl\n";
  out += "roster = roster.csv\n";
  if (!uda_map_file.empty()) out += "uda_map = " + uda_map_file + "\n";
  return out;
}

Dataset load_dataset(const DatasetConfig& config) {
  if (config.publications.empty()) throw DataError("no publications file configured");
  if (config.roster.empty()) throw DataError("no roster file configured");
  Dataset ds;
  ds.period = config.period;
  ds.category_lifesci = config.life_science_categories;
  ds.publications = load_publications(config.publications, ds.category_lifesci);
  ds.roster = load_roster(config.roster);
  return ds;
}

std::string to_string(ValidationIssue::Kind kind) {
  switch (kind) {
    case ValidationIssue::Kind::OrphanedAffiliation: return "orphaned_affiliation";
    case ValidationIssue::Kind::OutOfPeriod: return "out_of_period";
    case ValidationIssue::Kind::NoBaselineSupport: return "no_baseline_support";
  }
  return "unknown";
}

std::size_t ValidationReport::count(ValidationIssue::Kind kind) const {
  return static_cast<std::size_t>(std::count_if(
      issues.begin(), issues.end(), [kind](const ValidationIssue& i) { return i.kind == kind; }));
}

ValidationReport validate(const Dataset& dataset, const Baselines* baselines) {
  ValidationReport report;
  std::set<UnitKey> units;
  for (const auto& s : dataset.roster) units.insert(s.unit());

  for (const auto& pub : dataset.publications) {
    if (!dataset.period.contains(pub.year)) {
      report.issues.push_back({ValidationIssue::Kind::OutOfPeriod, pub.pub_id,
                               "year " + std::to_string(pub.year)});
    }
    std::set<UnitKey> reported;
    for (const auto& a : pub.authors) {
      if (a.affiliation && !units.count(*a.affiliation) && reported.insert(*a.affiliation).second) {
        report.issues.push_back({ValidationIssue::Kind::OrphanedAffiliation, pub.pub_id,
                                 a.affiliation->university_id + "/" + a.affiliation->sds_id});
      }
    }
    if (baselines && dataset.period.contains(pub.year)) {
      for (const auto& c : pub.categories) {
        if (!baselines->find(pub.year, c)) {
          report.issues.push_back({ValidationIssue::Kind::NoBaselineSupport, pub.pub_id,
                                   std::to_string(pub.year) + "/" + c});
        }
      }
    }
  }
  return report;
}

StaffAverage average_research_staff(const Dataset& dataset, const std::string& university,
                                    const std::string& sds) {
  StaffAverage out;
  const int years = dataset.period.years();
  bool found = false;
  double total = 0.0;
  for (const auto& s : dataset.roster) {
    if (s.university_id != university || s.sds_id != sds) continue;
    found = true;
    for (const auto& [year, fraction] : s.headcount_by_year)
      if (dataset.period.contains(year)) total += fraction;
  }
  out.unknown_unit = !found;
  out.rs = (found && years > 0) ? total / years : 0.0;
  return out;
}

std::map<UnitKey, double> average_research_staff_by_unit(const Dataset& dataset) {
  std::map<UnitKey, double> out;
  const int years = dataset.period.years();
  for (const auto& s : dataset.roster) {
    double& total = out[s.unit()];
    for (const auto& [year, fraction] : s.headcount_by_year)
      if (dataset.period.contains(year)) total += fraction;
  }
  for (auto& [unit, total] : out) total = years > 0 ? total / years : 0.0;
  return out;
}

}  // namespace rtsize
