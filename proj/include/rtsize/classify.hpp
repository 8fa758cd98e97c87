#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "rtsize/dataset.hpp"
#include "rtsize/scoring.hpp"
#include "rtsize/stats.hpp"

namespace rtsize {

enum class ScientistLabel { Ordinary, Top, Inactive };

struct ScientistLabels {
  std::map<std::string, ScientistLabel> labels;
  double threshold = 0.0;     // nearest-rank 80th percentile of FSC
  bool low_support = false;   // fewer than 5 scientists in the SDS
};

// Nearest-rank percentile: the value at rank ceil(p/100 * n) of the sorted
// data. Percent is an integer so the rank is computed exactly.
double nearest_rank_percentile(std::vector<double> values, int percent);

// Inactive iff fsc == 0; top iff fsc is strictly above the national 80th
// percentile of the SDS (inactive scientists included in the ranking).
// Scores of other SDSs are ignored.
ScientistLabels label_scientists(const std::string& sds_id,
                                 std::span<const ScientistScore> scores);

struct FrameUnit {
  std::string university_id;
  double size = 0.0;          // average research staff
  double productivity = 0.0;
  double top_share = 0.0;
  double inactive_share = 0.0;
  int n_scientists = 0;
  int n_pubs = 0;
};

struct SdsFrame {
  std::string sds_id;
  std::vector<FrameUnit> units;               // active units, by university_id
  std::vector<std::string> inactive_units;    // roster units with no publication
  double size_median = 0.0;
  double productivity_median = 0.0;
  double inactive_share_median = 0.0;
};

// Active units are those with at least one attributed publication and
// positive staff. Shares use the unit's roster headcount (scientists present
// for some part of the period).
SdsFrame build_frame(const std::string& sds_id, std::span<const UnitScore> unit_scores,
                     const ScientistLabels& labels, std::span<const StaffRecord> roster,
                     const Period& period);

enum class Variable { Size, TopShare, InactiveShare, Productivity };

Variable parse_variable(const std::string& name);
std::string to_string(Variable v);

struct ThresholdRule {
  double top_share_threshold = 0.20;
};

// true = Large / High, false = Small / Low. Values equal to the threshold
// fall in the lower class.
std::vector<bool> dichotomize(const SdsFrame& frame, Variable variable,
                              const ThresholdRule& rule = {});

// Rows: var_a Low/High; columns: var_b Small/Large (or Low/High).
ContingencyTable2x2 contingency(const std::vector<bool>& a_high,
                                const std::vector<bool>& b_high);
ContingencyTable2x2 contingency(const SdsFrame& frame, Variable var_a, Variable var_b,
                                const ThresholdRule& rule = {});

// Rows of frames.csv for one SDS, without header.
std::string frame_csv_rows(const SdsFrame& frame, const ThresholdRule& rule = {});
inline constexpr const char* kFrameCsvHeader =
    "sds_id,university_id,size,productivity,top_share,inactive_share,size_class,prod_class,"
    "top_class,inactive_class\n";

}  // namespace rtsize
