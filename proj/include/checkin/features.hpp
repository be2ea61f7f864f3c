#pragma once

#include <array>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "checkin/core.hpp"
#include "checkin/geo.hpp"

namespace checkin {

struct FeatureConfig {
  /// Radius for chunk C2 (neighbor category counts).
  double category_neighbor_radius_m = 200.0;
  std::array<double, kHotspotCount> hotspot_radii = kHotspotRadii;

  /// Throws DomainError unless the C2 radius is in (0, 1000] and the radii
  /// are the fixed 50..1000 m ladder.
  void validate() const;
  [[nodiscard]] double max_radius() const noexcept;
};

enum class HotspotMode { total, average };

/// Chunk C1: 1 at each owned category's index. Throws on unknown labels.
std::vector<double> encode_target_categories(std::span<const std::string> categories,
                                             const CategoryVocabulary& vocab);

/// Chunk C2: for food neighbors within the category radius, element v counts
/// the neighbors carrying category v.
std::vector<double> neighbor_category_counts(const SpatialIndex& index, GeoPoint center,
                                             const CategoryVocabulary& vocab,
                                             const FeatureConfig& cfg,
                                             std::optional<std::string_view> exclude_id);

/// Chunks C3/C4 (food_only) and C5/C6: per cumulative radius, ln(1 + total)
/// or ln(1 + total / max(1, count)) of neighbor check-ins.
std::array<double, kHotspotCount> hotspot_profile(const SpatialIndex& index, GeoPoint center,
                                                  std::span<const double> radii, bool food_only,
                                                  HotspotMode mode,
                                                  std::optional<std::string_view> exclude_id);

/// C1..C6 for a point. Pass the profile's own id as exclude_id when the
/// point is an indexed business; leave it empty for hypothetical locations.
FeatureVector extract_features(GeoPoint center, std::span<const std::string> categories,
                               const SpatialIndex& index, const CategoryVocabulary& vocab,
                               const FeatureConfig& cfg,
                               std::optional<std::string_view> exclude_id = std::nullopt);

/// Concatenation of the selected chunks. Throws on an all-false mask.
std::vector<double> apply_mask(const FeatureVector& fv, ChunkMask mask);

/// Dimension of apply_mask's output for a vocabulary of size vocab_size.
std::size_t masked_dimension(std::size_t vocab_size, ChunkMask mask);

/// Column names: c1_<label>, c2_<label>, c3_50 ... c6_1000.
std::vector<std::string> feature_names(const CategoryVocabulary& vocab,
                                       ChunkMask mask = ChunkMask::all());

/// CSV with a header of feature_names plus target_checkins.
void write_feature_csv(std::ostream& out, const CategoryVocabulary& vocab,
                       const std::vector<FeatureVector>& rows,
                       std::span<const Count> target_checkins);

}  // namespace checkin
