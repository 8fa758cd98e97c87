#include "rtsize/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

namespace rtsize {

namespace {

// Neumaier compensated sum so unit totals do not depend on publication order
// beyond rounding of the final result.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

std::string fallback_name(BaselineFallback f) {
  switch (f) {
    case BaselineFallback::None: return "none";
    case BaselineFallback::Mean: return "mean";
    case BaselineFallback::One: return "one";
  }
  return "none";
}

BaselineFallback parse_fallback(const std::string& s, const std::string& where) {
  if (s == "none") return BaselineFallback::None;
  if (s == "mean") return BaselineFallback::Mean;
  if (s == "one") return BaselineFallback::One;
  throw DataError(where + ": field 'fallback_used': unknown value '" + s + "'");
}

bool first_last_share_university(const PublicationRecord& pub) {
  const auto& first = pub.authors.front();
  const auto& last = pub.authors.back();
  return first.affiliation && last.affiliation &&
         first.affiliation->university_id == last.affiliation->university_id;
}

}  // namespace

const BaselineCell* Baselines::find(int year, const std::string& category) const {
  const auto it = cells_.find(Key{year, category});
  return it == cells_.end() ? nullptr : &it->second;
}

void Baselines::set(int year, const std::string& category, BaselineCell cell) {
  cells_[Key{year, category}] = cell;
}

double median_citations(std::vector<long long> values) {
  if (values.empty()) return 0.0;
  const std::size_t n = values.size();
  const auto mid = values.begin() + static_cast<std::ptrdiff_t>(n / 2);
  std::nth_element(values.begin(), mid, values.end());
  const double upper = static_cast<double>(*mid);
  if (n % 2 == 1) return upper;
  const double lower = static_cast<double>(*std::max_element(values.begin(), mid));
  return 0.5 * (lower + upper);
}

Baselines compute_baselines(const Dataset& dataset) {
  std::map<Baselines::Key, std::vector<long long>> cells;
  for (const auto& pub : dataset.publications)
    for (const auto& c : pub.categories) cells[{pub.year, c}].push_back(pub.citations);

  Baselines out;
  for (auto& [key, values] : cells) {
    BaselineCell cell;
    cell.n_pubs = static_cast<long long>(values.size());
    double total = 0.0;
    for (long long v : values) total += static_cast<double>(v);
    cell.value = median_citations(std::move(values));
    if (cell.value <= 0.0) {
      cell.value = total / static_cast<double>(cell.n_pubs);
      cell.fallback = BaselineFallback::Mean;
      if (cell.value <= 0.0) {
        cell.value = 1.0;
        cell.fallback = BaselineFallback::One;
      }
    }
    out.set(key.first, key.second, cell);
  }
  return out;
}

double standardized_impact(const PublicationRecord& pub, const Baselines& baselines) {
  double scale = 0.0;
  for (const auto& c : pub.categories) {
    const BaselineCell* cell = baselines.find(pub.year, c);
    if (!cell)
      throw DataError("publication '" + pub.pub_id + "': no baseline for (" +
                      std::to_string(pub.year) + ", " + c + ")");
    scale += cell->value;
  }
  scale /= static_cast<double>(pub.categories.size());
  return static_cast<double>(pub.citations) / scale;
}

AuthorWeights author_weights(const PublicationRecord& pub) {
  const std::size_t n = pub.authors.size();
  AuthorWeights out{pub.pub_id, std::vector<double>(n, 0.0)};
  auto& w = out.weights;
  if (n == 0) return out;

  if (!pub.life_science || n <= 2) {
    std::fill(w.begin(), w.end(), 1.0 / static_cast<double>(n));
    return out;
  }

  if (first_last_share_university(pub)) {
    w.front() = 0.40;
    w.back() = 0.40;
    const double rest = 0.20 / static_cast<double>(n - 2);
    for (std::size_t i = 1; i + 1 < n; ++i) w[i] = rest;
    return out;
  }

  w.front() = 0.30;
  w.back() = 0.30;
  if (n == 3) {
    w[1] = 0.40;  // absorbs both 15% shares and the 10% pool
  } else if (n == 4) {
    w[1] = 0.20;
    w[2] = 0.20;
  } else {
    w[1] = 0.15;
    w[n - 2] = 0.15;
    const double rest = 0.10 / static_cast<double>(n - 4);
    for (std::size_t i = 2; i + 2 < n; ++i) w[i] = rest;
  }
  return out;
}

double unit_fraction(const PublicationRecord& pub, const AuthorWeights& weights,
                     const std::string& university, const std::string& sds) {
  double total = 0.0;
  for (std::size_t i = 0; i < pub.authors.size(); ++i) {
    const auto& aff = pub.authors[i].affiliation;
    if (aff && aff->university_id == university && aff->sds_id == sds) total += weights.weights[i];
  }
  return total;
}

std::vector<UnitScore> compute_unit_scores(const Dataset& dataset, const Baselines& baselines) {
  struct Accumulator {
    CompensatedSum fsc;
    int n_pubs = 0;
  };
  std::map<UnitKey, Accumulator> acc;
  const auto staff = average_research_staff_by_unit(dataset);
  for (const auto& [unit, rs] : staff) acc[unit];

  std::map<UnitKey, double> fractions;
  for (const auto& pub : dataset.publications) {
    if (!dataset.period.contains(pub.year)) continue;
    const double impact = standardized_impact(pub, baselines);
    const AuthorWeights weights = author_weights(pub);
    fractions.clear();
    for (std::size_t i = 0; i < pub.authors.size(); ++i) {
      const auto& aff = pub.authors[i].affiliation;
      if (aff) fractions[*aff] += weights.weights[i];
    }
    for (const auto& [unit, fraction] : fractions) {
      if (fraction <= 0.0) continue;
      Accumulator& a = acc[unit];
      a.fsc.add(impact * fraction);
      ++a.n_pubs;
    }
  }

  std::vector<UnitScore> out;
  out.reserve(acc.size());
  for (const auto& [unit, a] : acc) {
    UnitScore s;
    s.university_id = unit.university_id;
    s.sds_id = unit.sds_id;
    s.fsc = a.fsc.value();
    s.n_pubs = a.n_pubs;
    const auto it = staff.find(unit);
    s.rs = it == staff.end() ? 0.0 : it->second;
    s.productivity_defined = s.rs > 0.0;
    s.productivity = s.productivity_defined ? s.fsc / s.rs : std::nan("");
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<ScientistScore> compute_scientist_scores(const Dataset& dataset,
                                                     const Baselines& baselines) {
  std::unordered_map<std::string, CompensatedSum> sums;
  sums.reserve(dataset.roster.size());
  for (const auto& s : dataset.roster) sums[s.scientist_id];

  for (const auto& pub : dataset.publications) {
    if (!dataset.period.contains(pub.year)) continue;
    bool any = false;
    for (const auto& a : pub.authors) any = any || sums.count(a.author_id);
    if (!any) continue;
    const double impact = standardized_impact(pub, baselines);
    const AuthorWeights weights = author_weights(pub);
    for (std::size_t i = 0; i < pub.authors.size(); ++i) {
      const auto it = sums.find(pub.authors[i].author_id);
      if (it != sums.end()) it->second.add(impact * weights.weights[i]);
    }
  }

  std::vector<ScientistScore> out;
  out.reserve(dataset.roster.size());
  for (const auto& s : dataset.roster)
    out.push_back({s.scientist_id, s.university_id, s.sds_id, sums[s.scientist_id].value()});
  return out;
}

std::string unit_scores_csv(const std::vector<UnitScore>& scores) {
  std::string out = "university_id,sds_id,fsc,rs,productivity,n_pubs\n";
  for (const auto& s : scores) {
    out += csv_escape(s.university_id) + ',' + csv_escape(s.sds_id) + ',' + format_real(s.fsc) +
           ',' + format_real(s.rs) + ',' +
           (s.productivity_defined ? format_real(s.productivity) : std::string("NA")) + ',' +
           std::to_string(s.n_pubs) + '\n';
  }
  return out;
}

std::string scientist_scores_csv(const std::vector<ScientistScore>& scores) {
  std::string out = "scientist_id,university_id,sds_id,fsc\n";
  for (const auto& s : scores) {
    out += csv_escape(s.scientist_id) + ',' + csv_escape(s.university_id) + ',' +
           csv_escape(s.sds_id) + ',' + format_real(s.fsc) + '\n';
  }
  return out;
}

std::string baselines_csv(const Baselines& baselines) {
  std::string out = "year,category,value,fallback_used,n_pubs\n";
  for (const auto& [key, cell] : baselines.cells()) {
    out += std::to_string(key.first) + ',' + csv_escape(key.second) + ',' +
           format_real(cell.value) + ',' + fallback_name(cell.fallback) + ',' +
           std::to_string(cell.n_pubs) + '\n';
  }
  return out;
}

Baselines load_baselines(const std::filesystem::path& path) {
  const CsvTable table = read_csv(path, {"year", "category", "value", "fallback_used", "n_pubs"});
  Baselines out;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const std::string where = path.string() + ":" + std::to_string(table.line_numbers[r]);
    BaselineCell cell;
    const int year = static_cast<int>(parse_int(row[0], where + ": field 'year'"));
    cell.value = parse_double(row[2], where + ": field 'value'");
    if (cell.value <= 0.0) throw DataError(where + ": field 'value': must be positive");
    cell.fallback = parse_fallback(trim(row[3]), where);
    cell.n_pubs = parse_int(row[4], where + ": field 'n_pubs'");
    if (cell.n_pubs < 1) throw DataError(where + ": field 'n_pubs': must be >= 1");
    out.set(year, trim(row[1]), cell);
  }
  return out;
}

}  // namespace rtsize
