#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <set>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace rtsize {

// Locally weighted polynomial regression. Points listed in `excluded` stay in
// `points` but take no part in the fit; `fitted` holds one value per kept
// point, in input order.
template <typename Scalar>
struct LoessFitT {
  Scalar span = Scalar(0.75);
  int degree = 1;
  std::vector<std::pair<Scalar, Scalar>> points;
  std::vector<Scalar> fitted;
  std::vector<std::size_t> excluded_outliers;  // ascending

  std::vector<std::size_t> kept_indices() const {
    std::vector<std::size_t> kept;
    std::size_t e = 0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (e < excluded_outliers.size() && excluded_outliers[e] == i) {
        ++e;
        continue;
      }
      kept.push_back(i);
    }
    return kept;
  }

  // Local fit evaluated at an arbitrary abscissa using the kept points.
  Scalar predict(Scalar x0) const;
};

using LoessFit = LoessFitT<double>;

namespace detail {

template <typename Scalar>
std::size_t loess_neighbors(Scalar span, std::size_t n) {
  // ceil(span * n) with a small guard against products such as 0.7 * 10.
  const auto q = static_cast<std::size_t>(std::ceil(span * static_cast<Scalar>(n) - Scalar(1e-9)));
  return std::clamp<std::size_t>(q, 1, n);
}

}  // namespace detail

// Value at x0 of the degree-`degree` polynomial fitted by weighted least
// squares to the ceil(span * n) nearest neighbours of x0, with tricube
// weights (1 - (d / d_max)^3)^3. All points tied at the neighbourhood radius
// are included. When the local design is rank deficient (fewer distinct
// abscissae than coefficients) the weighted mean is returned instead.
template <typename Scalar>
Scalar loess_predict(std::span<const Scalar> xs, std::span<const Scalar> ys, Scalar x0,
                     Scalar span, int degree) {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  const std::size_t n = xs.size();
  if (n == 0 || ys.size() != n) throw std::invalid_argument("loess: empty or mismatched input");

  std::vector<Scalar> dist(n);
  for (std::size_t i = 0; i < n; ++i) dist[i] = std::abs(xs[i] - x0);
  std::vector<Scalar> sorted = dist;
  const std::size_t q = detail::loess_neighbors(span, n);
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(q - 1), sorted.end());
  const Scalar d_max = sorted[q - 1];

  std::vector<std::size_t> idx;
  std::vector<Scalar> w;
  for (std::size_t i = 0; i < n; ++i) {
    if (dist[i] > d_max) continue;
    Scalar wi;
    if (d_max > Scalar(0)) {
      const Scalar u = dist[i] / d_max;
      const Scalar t = Scalar(1) - u * u * u;
      wi = t * t * t;
    } else {
      wi = Scalar(1);
    }
    if (wi <= Scalar(0)) continue;
    idx.push_back(i);
    w.push_back(wi);
  }

  Scalar wsum = 0, wy = 0;
  for (std::size_t k = 0; k < idx.size(); ++k) {
    wsum += w[k];
    wy += w[k] * ys[idx[k]];
  }
  const Scalar weighted_mean = wy / wsum;

  std::vector<Scalar> distinct;
  for (std::size_t i : idx) distinct.push_back(xs[i]);
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  const int ncoef = degree + 1;
  if (degree <= 0 || static_cast<int>(distinct.size()) < ncoef) return weighted_mean;

  // Centred, radius-scaled abscissae keep the system well conditioned.
  const Scalar scale = d_max > Scalar(0) ? d_max : Scalar(1);
  Matrix design(static_cast<Eigen::Index>(idx.size()), ncoef);
  Vector rhs(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) {
    const Scalar sw = std::sqrt(w[k]);
    const Scalar u = (xs[idx[k]] - x0) / scale;
    Scalar p = 1;
    for (int j = 0; j < ncoef; ++j) {
      design(static_cast<Eigen::Index>(k), j) = sw * p;
      p *= u;
    }
    rhs(static_cast<Eigen::Index>(k)) = sw * ys[idx[k]];
  }
  const Eigen::ColPivHouseholderQR<Matrix> qr(design);
  if (qr.rank() < ncoef) return weighted_mean;
  const Vector coef = qr.solve(rhs);
  return coef(0);
}

template <typename Scalar>
Scalar LoessFitT<Scalar>::predict(Scalar x0) const {
  std::vector<Scalar> xs, ys;
  for (std::size_t i : kept_indices()) {
    xs.push_back(points[i].first);
    ys.push_back(points[i].second);
  }
  return loess_predict<Scalar>(xs, ys, x0, span, degree);
}

// Requires at least max(4, degree + 2) kept points and span in (0, 1].
template <typename Scalar>
LoessFitT<Scalar> loess_fit(std::span<const std::pair<Scalar, Scalar>> points, Scalar span,
                            int degree, const std::set<std::size_t>& excluded = {}) {
  if (!(span > Scalar(0) && span <= Scalar(1)))
    throw std::invalid_argument("loess: span must lie in (0, 1]");
  if (degree < 0 || degree > 2) throw std::invalid_argument("loess: degree must be 0, 1 or 2");
  LoessFitT<Scalar> fit;
  fit.span = span;
  fit.degree = degree;
  fit.points.assign(points.begin(), points.end());
  for (std::size_t e : excluded)
    if (e < points.size()) fit.excluded_outliers.push_back(e);

  const auto kept = fit.kept_indices();
  const std::size_t min_points = std::max<std::size_t>(4, static_cast<std::size_t>(degree) + 2);
  if (kept.size() < min_points)
    throw std::invalid_argument("loess: too few points for the requested degree");

  std::vector<Scalar> xs, ys;
  for (std::size_t i : kept) {
    xs.push_back(fit.points[i].first);
    ys.push_back(fit.points[i].second);
  }
  fit.fitted.reserve(kept.size());
  for (Scalar x0 : xs) fit.fitted.push_back(loess_predict<Scalar>(xs, ys, x0, span, degree));
  return fit;
}

template <typename Scalar>
LoessFitT<Scalar> loess_fit(const std::vector<std::pair<Scalar, Scalar>>& points, Scalar span,
                            int degree, const std::set<std::size_t>& excluded = {}) {
  return loess_fit<Scalar>(std::span<const std::pair<Scalar, Scalar>>(points), span, degree,
                           excluded);
}

// Indices (into fit.points) of kept points whose residual exceeds
// k * 1.4826 * MAD of the residuals. A zero MAD flags nothing.
std::vector<std::size_t> detect_outliers_residual(const LoessFit& fit, double k = 3.0);

}  // namespace rtsize
