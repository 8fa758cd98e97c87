#include "rtsize/classify.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

namespace rtsize {

double nearest_rank_percentile(std::vector<double> values, int percent) {
  if (values.empty()) throw std::invalid_argument("percentile of empty data");
  if (percent <= 0 || percent > 100) throw std::invalid_argument("percent must be in (0, 100]");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  std::size_t rank = (static_cast<std::size_t>(percent) * n + 99) / 100;
  rank = std::clamp<std::size_t>(rank, 1, n);
  return values[rank - 1];
}

ScientistLabels label_scientists(const std::string& sds_id,
                                 std::span<const ScientistScore> scores) {
  ScientistLabels out;
  std::vector<double> fsc;
  for (const auto& s : scores)
    if (s.sds_id == sds_id) fsc.push_back(s.fsc);
  if (fsc.empty()) return out;
  out.low_support = fsc.size() < 5;
  out.threshold = nearest_rank_percentile(fsc, 80);
  for (const auto& s : scores) {
    if (s.sds_id != sds_id) continue;
    ScientistLabel label = ScientistLabel::Ordinary;
    if (s.fsc == 0.0)
      label = ScientistLabel::Inactive;
    else if (s.fsc > out.threshold)
      label = ScientistLabel::Top;
    out.labels[s.scientist_id] = label;
  }
  return out;
}

SdsFrame build_frame(const std::string& sds_id, std::span<const UnitScore> unit_scores,
                     const ScientistLabels& labels, std::span<const StaffRecord> roster,
                     const Period& period) {
  SdsFrame frame;
  frame.sds_id = sds_id;

  struct Counts {
    int total = 0, top = 0, inactive = 0;
  };
  std::map<std::string, Counts> counts;
  for (const auto& s : roster) {
    if (s.sds_id != sds_id) continue;
    bool present = false;
    for (const auto& [year, fraction] : s.headcount_by_year)
      present = present || (period.contains(year) && fraction > 0.0);
    if (!present) continue;
    Counts& c = counts[s.university_id];
    ++c.total;
    const auto it = labels.labels.find(s.scientist_id);
    if (it == labels.labels.end()) continue;
    if (it->second == ScientistLabel::Top) ++c.top;
    if (it->second == ScientistLabel::Inactive) ++c.inactive;
  }

  for (const auto& u : unit_scores) {
    if (u.sds_id != sds_id) continue;
    if (u.n_pubs < 1 || !u.productivity_defined) {
      if (u.rs > 0.0) frame.inactive_units.push_back(u.university_id);
      continue;
    }
    FrameUnit fu;
    fu.university_id = u.university_id;
    fu.size = u.rs;
    fu.productivity = u.productivity;
    fu.n_pubs = u.n_pubs;
    const auto it = counts.find(u.university_id);
    if (it != counts.end() && it->second.total > 0) {
      fu.n_scientists = it->second.total;
      fu.top_share = static_cast<double>(it->second.top) / it->second.total;
      fu.inactive_share = static_cast<double>(it->second.inactive) / it->second.total;
    }
    frame.units.push_back(std::move(fu));
  }
  std::sort(frame.units.begin(), frame.units.end(),
            [](const FrameUnit& x, const FrameUnit& y) { return x.university_id < y.university_id; });
  std::sort(frame.inactive_units.begin(), frame.inactive_units.end());

  if (!frame.units.empty()) {
    std::vector<double> size, prod, inactive;
    for (const auto& u : frame.units) {
      size.push_back(u.size);
      prod.push_back(u.productivity);
      inactive.push_back(u.inactive_share);
    }
    frame.size_median = median(size);
    frame.productivity_median = median(prod);
    frame.inactive_share_median = median(inactive);
  }
  return frame;
}

Variable parse_variable(const std::string& name) {
  if (name == "size") return Variable::Size;
  if (name == "top_share" || name == "top") return Variable::TopShare;
  if (name == "inactive_share" || name == "inactive") return Variable::InactiveShare;
  if (name == "productivity" || name == "prod") return Variable::Productivity;
  throw std::invalid_argument("unknown variable '" + name + "'");
}

std::string to_string(Variable v) {
  switch (v) {
    case Variable::Size: return "size";
    case Variable::TopShare: return "top_share";
    case Variable::InactiveShare: return "inactive_share";
    case Variable::Productivity: return "productivity";
  }
  return "unknown";
}

std::vector<bool> dichotomize(const SdsFrame& frame, Variable variable, const ThresholdRule& rule) {
  std::vector<bool> high;
  high.reserve(frame.units.size());
  for (const auto& u : frame.units) {
    switch (variable) {
      case Variable::Size: high.push_back(u.size > frame.size_median); break;
      case Variable::TopShare: high.push_back(u.top_share > rule.top_share_threshold); break;
      case Variable::InactiveShare:
        high.push_back(u.inactive_share > frame.inactive_share_median);
        break;
      case Variable::Productivity:
        high.push_back(u.productivity > frame.productivity_median);
        break;
    }
  }
  return high;
}

ContingencyTable2x2 contingency(const std::vector<bool>& a_high,
                                const std::vector<bool>& b_high) {
  if (a_high.size() != b_high.size())
    throw std::invalid_argument("contingency: label vectors differ in length");
  ContingencyTable2x2 t;
  for (std::size_t i = 0; i < a_high.size(); ++i) {
    if (!a_high[i] && !b_high[i]) ++t.a;
    else if (!a_high[i] && b_high[i]) ++t.b;
    else if (a_high[i] && !b_high[i]) ++t.c;
    else ++t.d;
  }
  return t;
}

ContingencyTable2x2 contingency(const SdsFrame& frame, Variable var_a, Variable var_b,
                                const ThresholdRule& rule) {
  ContingencyTable2x2 t =
      contingency(dichotomize(frame, var_a, rule), dichotomize(frame, var_b, rule));
  t.row_label = to_string(var_a);
  t.col_label = to_string(var_b);
  return t;
}

std::string frame_csv_rows(const SdsFrame& frame, const ThresholdRule& rule) {
  const auto size = dichotomize(frame, Variable::Size, rule);
  const auto prod = dichotomize(frame, Variable::Productivity, rule);
  const auto top = dichotomize(frame, Variable::TopShare, rule);
  const auto inactive = dichotomize(frame, Variable::InactiveShare, rule);
  std::string out;
  for (std::size_t i = 0; i < frame.units.size(); ++i) {
    const auto& u = frame.units[i];
    out += csv_escape(frame.sds_id) + ',' + csv_escape(u.university_id) + ',' +
           format_real(u.size) + ',' + format_real(u.productivity) + ',' +
           format_real(u.top_share) + ',' + format_real(u.inactive_share) + ',' +
           (size[i] ? "large" : "small") + ',' + (prod[i] ? "high" : "low") + ',' +
           (top[i] ? "high" : "low") + ',' + (inactive[i] ? "high" : "low") + '\n';
  }
  return out;
}

}  // namespace rtsize
