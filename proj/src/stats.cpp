#include "rtsize/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

namespace rtsize {

double ContingencyTable2x2::expected(int r, int c_) const {
  const long long total = n();
  if (total == 0) return 0.0;
  return static_cast<double>(row_total(r)) * static_cast<double>(col_total(c_)) /
         static_cast<double>(total);
}

GTestResult g_test(const ContingencyTable2x2& table, bool williams) {
  if (table.a < 0 || table.b < 0 || table.c < 0 || table.d < 0)
    throw std::invalid_argument("g_test: negative cell count");
  GTestResult out;
  const long long n = table.n();
  if (n == 0 || table.row_total(0) == 0 || table.row_total(1) == 0 || table.col_total(0) == 0 ||
      table.col_total(1) == 0) {
    out.degenerate = true;
    return out;
  }
  double g = 0.0;
  for (int r = 0; r < 2; ++r) {
    for (int c = 0; c < 2; ++c) {
      const auto o = static_cast<double>(table.cell(r, c));
      if (o > 0.0) g += o * std::log(o / table.expected(r, c));
    }
  }
  g = std::max(0.0, 2.0 * g);
  if (williams) {
    const auto nd = static_cast<double>(n);
    double inv_rows = 0.0, inv_cols = 0.0;
    for (int i = 0; i < 2; ++i) {
      inv_rows += 1.0 / static_cast<double>(table.row_total(i));
      inv_cols += 1.0 / static_cast<double>(table.col_total(i));
    }
    const double q = 1.0 + (nd * inv_rows - 1.0) * (nd * inv_cols - 1.0) / (6.0 * nd);
    g /= q;
  }
  out.g = g;
  out.p = chi_square_sf(g, 1);
  return out;
}

double gamma_q(double s, double x) {
  if (s <= 0.0 || x < 0.0) throw std::domain_error("gamma_q: invalid arguments");
  if (x == 0.0) return 1.0;
  const double log_prefix = s * std::log(x) - x - std::lgamma(s);
  constexpr double eps = 1e-16;
  if (x < s + 1.0) {
    // Lower series P(s, x) = x^s e^-x / Gamma(s+1) * sum x^k / ((s+1)...(s+k)).
    double term = 1.0 / s, sum = term;
    for (int k = 1; k < 10000; ++k) {
      term *= x / (s + k);
      sum += term;
      if (std::abs(term) < std::abs(sum) * eps) break;
    }
    return std::clamp(1.0 - sum * std::exp(log_prefix), 0.0, 1.0);
  }
  // Modified Lentz evaluation of the continued fraction for Q(s, x).
  constexpr double tiny = 1e-300;
  double b = x + 1.0 - s;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 10000; ++i) {
    const double an = -i * (i - s);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < eps) break;
  }
  return std::clamp(std::exp(log_prefix) * h, 0.0, 1.0);
}

double chi_square_sf(double x, int df) {
  if (std::isnan(x) || x < 0.0) throw std::domain_error("chi_square_sf: x must be non-negative");
  if (df < 1) throw std::domain_error("chi_square_sf: df must be >= 1");
  if (x == 0.0) return 1.0;
  if (df == 1) return std::erfc(std::sqrt(0.5 * x));
  return gamma_q(0.5 * df, 0.5 * x);
}

TauResult kendall_tau_b_2x2(const ContingencyTable2x2& t) {
  TauResult out;
  const auto r0 = static_cast<double>(t.row_total(0)), r1 = static_cast<double>(t.row_total(1));
  const auto c0 = static_cast<double>(t.col_total(0)), c1 = static_cast<double>(t.col_total(1));
  if (r0 == 0 || r1 == 0 || c0 == 0 || c1 == 0) {
    out.degenerate = true;
    return out;
  }
  const double num = static_cast<double>(t.a) * static_cast<double>(t.d) -
                     static_cast<double>(t.b) * static_cast<double>(t.c);
  out.tau = std::clamp(num / std::sqrt(r0 * r1 * c0 * c1), -1.0, 1.0);
  return out;
}

AssociationResult associate(const ContingencyTable2x2& table, double alpha, bool williams) {
  AssociationResult out;
  out.table = table;
  const GTestResult g = g_test(table, williams);
  const TauResult tau = kendall_tau_b_2x2(table);
  out.g_statistic = g.g;
  out.p_value = g.p;
  out.tau_b = tau.tau;
  out.degenerate = g.degenerate;
  out.significant = !g.degenerate && g.p < alpha;
  return out;
}

double quantile_sorted(std::span<const double> sorted, double prob) {
  if (sorted.empty()) throw std::invalid_argument("quantile of empty data");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * prob;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

double median(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  return quantile_sorted(values, 0.5);
}

BoxStats box_stats(std::span<const double> values) {
  BoxStats box;
  box.n = values.size();
  if (values.empty()) return box;
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  box.q1 = quantile_sorted(sorted, 0.25);
  box.median = quantile_sorted(sorted, 0.5);
  box.q3 = quantile_sorted(sorted, 0.75);
  box.mean = std::accumulate(sorted.begin(), sorted.end(), 0.0) / static_cast<double>(sorted.size());
  const double iqr = box.q3 - box.q1;
  const double lo_fence = box.q1 - 1.5 * iqr;
  const double hi_fence = box.q3 + 1.5 * iqr;
  box.whisker_lo = box.q1;
  box.whisker_hi = box.q3;
  bool have_lo = false;
  for (double v : sorted) {
    if (v < lo_fence || v > hi_fence) {
      box.outliers.push_back(v);
      continue;
    }
    if (!have_lo) {
      box.whisker_lo = v;
      have_lo = true;
    }
    box.whisker_hi = v;
  }
  return box;
}

QuartileGroups quartile_split(std::span<const std::pair<double, double>> units) {
  if (units.size() < 4) throw std::invalid_argument("quartile_split: need at least 4 units");
  std::vector<std::pair<double, double>> sorted(units.begin(), units.end());
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const auto& x, const auto& y) { return x.first < y.first; });
  QuartileGroups out;
  const std::size_t base = sorted.size() / 4;
  const std::size_t extra = sorted.size() % 4;
  std::size_t pos = 0;
  for (std::size_t g = 0; g < 4; ++g) {
    const std::size_t len = base + (g < extra ? 1 : 0);
    auto& group = out.groups[g];
    for (std::size_t i = 0; i < len; ++i) group.push_back(sorted[pos + i].second);
    out.size_range[g] = {sorted[pos].first, sorted[pos + len - 1].first};
    out.box[g] = box_stats(group);
    pos += len;
  }
  return out;
}

double between_group_dispersion(std::span<const std::vector<double>> groups) {
  double total = 0.0;
  std::size_t n = 0;
  for (const auto& g : groups) {
    total += std::accumulate(g.begin(), g.end(), 0.0);
    n += g.size();
  }
  if (n == 0) return 0.0;
  const double grand = total / static_cast<double>(n);
  double stat = 0.0;
  for (const auto& g : groups) {
    if (g.empty()) continue;
    const double m = std::accumulate(g.begin(), g.end(), 0.0) / static_cast<double>(g.size());
    stat += static_cast<double>(g.size()) * (m - grand) * (m - grand);
  }
  return stat;
}

namespace {

// Unbiased draw in [0, bound) by rejection on the 64-bit output.
std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t threshold = (0 - bound) % bound;
  for (;;) {
    const std::uint64_t r = rng();
    if (r >= threshold) return r % bound;
  }
}

}  // namespace

double npc_test(std::span<const std::vector<double>> groups, int n_permutations,
                std::uint64_t seed) {
  if (n_permutations < 999) throw std::invalid_argument("npc_test: n_permutations must be >= 999");
  std::vector<double> pooled;
  std::vector<std::size_t> sizes;
  for (const auto& g : groups) {
    if (g.empty()) continue;
    pooled.insert(pooled.end(), g.begin(), g.end());
    sizes.push_back(g.size());
  }
  if (sizes.size() < 2) return 1.0;
  // Canonical pool order: the p-value then depends only on the group
  // contents, not on how the groups were listed.
  std::sort(pooled.begin(), pooled.end());
  if (std::all_of(pooled.begin(), pooled.end(), [&](double v) { return v == pooled.front(); }))
    return 1.0;

  const double observed = between_group_dispersion(groups);
  const double tol = 1e-12 * std::max(1.0, std::abs(observed));

  std::vector<double> shuffled(pooled.size());
  std::vector<std::vector<double>> perm_groups(sizes.size());
  long long at_least = 0;
  for (int i = 0; i < n_permutations; ++i) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(
                                                         static_cast<std::uint64_t>(i) >> 32)};
    std::mt19937_64 rng(seq);
    shuffled = pooled;
    for (std::size_t k = shuffled.size() - 1; k > 0; --k)
      std::swap(shuffled[k], shuffled[uniform_below(rng, k + 1)]);
    std::size_t pos = 0;
    for (std::size_t g = 0; g < sizes.size(); ++g) {
      perm_groups[g].assign(shuffled.begin() + static_cast<std::ptrdiff_t>(pos),
                            shuffled.begin() + static_cast<std::ptrdiff_t>(pos + sizes[g]));
      pos += sizes[g];
    }
    if (between_group_dispersion(perm_groups) >= observed - tol) ++at_least;
  }
  return static_cast<double>(1 + at_least) / static_cast<double>(1 + n_permutations);
}

double npc_test(const QuartileGroups& groups, int n_permutations, std::uint64_t seed) {
  return npc_test(std::span<const std::vector<double>>(groups.groups), n_permutations, seed);
}

}  // namespace rtsize
