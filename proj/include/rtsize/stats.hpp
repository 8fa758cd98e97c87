#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace rtsize {

// 2x2 frequency table. Rows are variable A (Low, High), columns variable B
// (Small, Large):
//
//            Small  Large
//     Low      a      b
//     High     c      d
struct ContingencyTable2x2 {
  long long a = 0, b = 0, c = 0, d = 0;
  std::string row_label;
  std::string col_label;

  long long n() const { return a + b + c + d; }
  long long row_total(int r) const { return r == 0 ? a + b : c + d; }
  long long col_total(int c_) const { return c_ == 0 ? a + c : b + d; }
  long long cell(int r, int c_) const { return r == 0 ? (c_ == 0 ? a : b) : (c_ == 0 ? c : d); }
  // Expected count under independence: row total * column total / n.
  double expected(int r, int c_) const;
  ContingencyTable2x2 transposed() const { return {a, c, b, d, col_label, row_label}; }
};

struct GTestResult {
  double g = 0.0;
  double p = 1.0;
  bool degenerate = false;  // a zero margin; G = 0, p = 1
};

// Likelihood-ratio chi-square G = 2 * sum O ln(O/E), 1 degree of freedom.
// `williams` divides G by Williams' correction factor q.
GTestResult g_test(const ContingencyTable2x2& table, bool williams = false);

// Upper tail of the chi-square distribution. df = 1 goes through erfc; other
// degrees of freedom use the regularized incomplete gamma function.
double chi_square_sf(double x, int df = 1);

// Regularized upper incomplete gamma Q(s, x), series below s + 1 and Lentz
// continued fraction above.
double gamma_q(double s, double x);

struct TauResult {
  double tau = 0.0;
  bool degenerate = false;  // some margin is zero
};

TauResult kendall_tau_b_2x2(const ContingencyTable2x2& table);

struct AssociationResult {
  ContingencyTable2x2 table;
  double g_statistic = 0.0;
  double p_value = 1.0;
  double tau_b = 0.0;
  bool significant = false;
  bool degenerate = false;
  bool not_run = false;
};

// G-test plus tau-b on one table; significant iff p < alpha.
AssociationResult associate(const ContingencyTable2x2& table, double alpha, bool williams = false);

// Linear-interpolation quantile (Hyndman-Fan type 7) of sorted data.
double quantile_sorted(std::span<const double> sorted, double prob);
double median(std::vector<double> values);

struct BoxStats {
  std::size_t n = 0;
  double q1 = 0.0, median = 0.0, q3 = 0.0;
  double whisker_lo = 0.0, whisker_hi = 0.0;
  double mean = 0.0;
  std::vector<double> outliers;  // ascending
};

// Tukey box: whiskers at the most extreme values inside q1 - 1.5 IQR and
// q3 + 1.5 IQR; everything beyond is an outlier.
BoxStats box_stats(std::span<const double> values);

struct QuartileGroups {
  std::array<std::vector<double>, 4> groups;            // productivity values
  std::array<std::pair<double, double>, 4> size_range;  // min/max size per group
  std::array<BoxStats, 4> box;
};

// Sorts (size, productivity) pairs by size and cuts them into four contiguous
// groups; the n % 4 leftover units go one each to the lowest quartiles.
QuartileGroups quartile_split(std::span<const std::pair<double, double>> units);

// Between-group dispersion sum_g n_g (mean_g - grand_mean)^2.
double between_group_dispersion(std::span<const std::vector<double>> groups);

// Permutation test of equal group means. Values are reshuffled across groups
// with group sizes fixed; p = (1 + #{T_perm >= T_obs}) / (1 + n_permutations).
// Permutation i draws from its own generator seeded by (seed, i), so results
// do not depend on evaluation order.
double npc_test(std::span<const std::vector<double>> groups, int n_permutations,
                std::uint64_t seed);
double npc_test(const QuartileGroups& groups, int n_permutations, std::uint64_t seed);

}  // namespace rtsize
