#include "checkin/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace checkin {

void DnnConfig::validate() const {
  if (!(radius_m > 0.0) || !std::isfinite(radius_m)) {
    throw DomainError("DNN radius must be positive");
  }
  if (!(fallback_checkins >= 0.0)) throw DomainError("DNN fallback must be non-negative");
}

double dnn_predict(const SpatialIndex& index, GeoPoint center, const DnnConfig& cfg,
                   std::optional<std::string_view> exclude_id) {
  cfg.validate();
  const auto hits = index.radius_query(center, cfg.radius_m, exclude_id);
  double log_sum = 0.0;
  std::size_t n = 0;
  for (const auto& hit : hits) {
    if (cfg.food_only && !hit.profile->is_food) continue;
    log_sum += std::log1p(static_cast<double>(hit.profile->checkins));
    ++n;
  }
  if (n == 0) return cfg.fallback_checkins;
  return std::max(0.0, std::expm1(log_sum / static_cast<double>(n)));
}

double median_checkins(std::span<const Count> counts) {
  if (counts.empty()) throw DomainError("median of an empty set");
  std::vector<Count> sorted(counts.begin(), counts.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t mid = sorted.size() / 2;
  if (sorted.size() % 2 == 1) return static_cast<double>(sorted[mid]);
  return (static_cast<double>(sorted[mid - 1]) + static_cast<double>(sorted[mid])) / 2.0;
}

MeanPredictor::MeanPredictor(std::span<const Count> targets) {
  if (targets.empty()) throw DomainError("mean predictor needs at least one target");
  double sum = 0.0;
  for (Count c : targets) sum += log1p_score(static_cast<double>(c));
  value_ = std::max(0.0, std::expm1(sum / static_cast<double>(targets.size())));
}

MeanPredictor::MeanPredictor(std::span<const double> targets) {
  if (targets.empty()) throw DomainError("mean predictor needs at least one target");
  double sum = 0.0;
  for (double c : targets) sum += log1p_score(c);
  value_ = std::max(0.0, std::expm1(sum / static_cast<double>(targets.size())));
}

}  // namespace checkin
