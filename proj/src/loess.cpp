#include "rtsize/loess.hpp"

#include "rtsize/stats.hpp"

namespace rtsize {

std::vector<std::size_t> detect_outliers_residual(const LoessFit& fit, double k) {
  const auto kept = fit.kept_indices();
  if (kept.size() != fit.fitted.size()) throw std::invalid_argument("loess fit is inconsistent");
  std::vector<double> residuals(kept.size());
  for (std::size_t j = 0; j < kept.size(); ++j)
    residuals[j] = fit.points[kept[j]].second - fit.fitted[j];
  if (residuals.empty()) return {};

  const double center = median(residuals);
  std::vector<double> deviations(residuals.size());
  for (std::size_t j = 0; j < residuals.size(); ++j) deviations[j] = std::abs(residuals[j] - center);
  const double mad = median(deviations);
  if (!(mad > 0.0)) return {};

  const double limit = k * 1.4826 * mad;
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < residuals.size(); ++j)
    if (std::abs(residuals[j]) > limit) out.push_back(kept[j]);
  return out;
}

}  // namespace rtsize
