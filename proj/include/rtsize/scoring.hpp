#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "rtsize/dataset.hpp"

namespace rtsize {

// How a baseline cell obtained its scaling value.
enum class BaselineFallback { None, Mean, One };

struct BaselineCell {
  double value = 1.0;  // median citations of the (year, category) cell, always > 0
  BaselineFallback fallback = BaselineFallback::None;
  long long n_pubs = 0;
};

// Citation scaling table keyed by (year, subject category).
class Baselines {
 public:
  using Key = std::pair<int, std::string>;

  const BaselineCell* find(int year, const std::string& category) const;
  void set(int year, const std::string& category, BaselineCell cell);
  const std::map<Key, BaselineCell>& cells() const { return cells_; }
  std::size_t size() const { return cells_.size(); }

 private:
  std::map<Key, BaselineCell> cells_;
};

// Median of a citation list; the mean of the two central values for even
// lengths. Empty input returns 0.
double median_citations(std::vector<long long> values);

// Median per (year, category) over every publication in the dataset. A
// publication listed in k categories contributes to each of the k cells.
// Zero medians fall back to the cell mean, then to 1.
Baselines compute_baselines(const Dataset& dataset);

// Citations divided by the mean of the baseline values of the publication's
// categories. Throws DataError naming the missing (year, category).
double standardized_impact(const PublicationRecord& pub, const Baselines& baselines);

// Credit shares indexed by byline position - 1; they sum to 1.
struct AuthorWeights {
  std::string pub_id;
  std::vector<double> weights;

  double at_position(int position) const { return weights.at(static_cast<std::size_t>(position - 1)); }
};

// Equal split for ordinary publications. Life-science bylines weight first and
// last authors: 40/40 with the remaining 20% shared when first and last belong
// to the same university, otherwise 30/30 to first and last, 15/15 to second
// and second-to-last and the remaining 10% shared. Short bylines collapse
// positions so the total is always 1.
AuthorWeights author_weights(const PublicationRecord& pub);

double unit_fraction(const PublicationRecord& pub, const AuthorWeights& weights,
                     const std::string& university, const std::string& sds);

struct UnitScore {
  std::string university_id;
  std::string sds_id;
  double fsc = 0.0;
  double rs = 0.0;
  double productivity = 0.0;
  bool productivity_defined = false;  // false when rs == 0
  int n_pubs = 0;

  UnitKey unit() const { return {university_id, sds_id}; }
};

struct ScientistScore {
  std::string scientist_id;
  std::string university_id;
  std::string sds_id;
  double fsc = 0.0;
};

// Only publications dated inside the dataset period are attributed. Results
// are sorted by (university_id, sds_id).
std::vector<UnitScore> compute_unit_scores(const Dataset& dataset, const Baselines& baselines);

// One entry per roster scientist, in roster order; the byline author_id is
// matched against scientist_id.
std::vector<ScientistScore> compute_scientist_scores(const Dataset& dataset,
                                                     const Baselines& baselines);

std::string unit_scores_csv(const std::vector<UnitScore>& scores);
std::string scientist_scores_csv(const std::vector<ScientistScore>& scores);
std::string baselines_csv(const Baselines& baselines);
Baselines load_baselines(const std::filesystem::path& path);

}  // namespace rtsize
