#pragma once

#include <optional>
#include <span>
#include <string_view>

#include "checkin/core.hpp"
#include "checkin/geo.hpp"

namespace checkin {

struct DnnConfig {
  double radius_m = 100.0;
  /// Prediction when no neighbor lies within the radius; callers set it to
  /// the training-set median check-ins.
  double fallback_checkins = 0.0;
  /// Only food neighbors vote.
  bool food_only = true;

  void validate() const;
};

/// Distance-based nearest-neighbors baseline:
/// exp(mean of ln(1 + check-ins) over neighbors within the radius) - 1.
double dnn_predict(const SpatialIndex& index, GeoPoint center, const DnnConfig& cfg,
                   std::optional<std::string_view> exclude_id = std::nullopt);

/// Median of the counts (mean of the two middle values for even sizes).
double median_checkins(std::span<const Count> counts);

/// Constant predictor exp(mean(ln(1 + y))) - 1.
class MeanPredictor {
 public:
  /// Throws DomainError on empty or negative targets.
  explicit MeanPredictor(std::span<const Count> targets);
  explicit MeanPredictor(std::span<const double> targets);

  [[nodiscard]] double predict() const noexcept { return value_; }

 private:
  double value_ = 0.0;
};

}  // namespace checkin
