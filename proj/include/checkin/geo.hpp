#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "checkin/core.hpp"

namespace checkin {

/// IUGG mean Earth radius.
inline constexpr double kEarthRadiusMeters = 6'371'008.8;

/// Great-circle distance in meters on a sphere of radius kEarthRadiusMeters.
double haversine(GeoPoint a, GeoPoint b) noexcept;

struct NeighborHit {
  std::size_t index = 0;  // position in the indexed profile list
  const PlaceProfile* profile = nullptr;
  double distance_m = 0.0;
};

/// Uniform latitude/longitude grid over a list of profiles, answering exact
/// radius and k-nearest queries with haversine distances.
///
/// The index does not own the profiles; the span passed at construction must
/// outlive it. Once built the index is immutable and safe for concurrent
/// queries. Longitudes are not wrapped across the antimeridian.
class SpatialIndex {
 public:
  SpatialIndex() = default;
  /// Throws DomainError if max_radius_m <= 0 or a profile has an invalid location.
  SpatialIndex(std::span<const PlaceProfile> profiles, double max_radius_m);

  /// Every profile with haversine(center, p) <= radius_m, except exclude_id,
  /// sorted by distance then id. Throws DomainError unless
  /// 0 < radius_m <= max_radius().
  [[nodiscard]] std::vector<NeighborHit> radius_query(
      GeoPoint center, double radius_m,
      std::optional<std::string_view> exclude_id = std::nullopt) const;

  /// The k nearest profiles (fewer when the index is smaller), sorted by
  /// distance then id. Throws DomainError when k == 0.
  [[nodiscard]] std::vector<NeighborHit> knn(
      GeoPoint center, std::size_t k,
      std::optional<std::string_view> exclude_id = std::nullopt) const;

  [[nodiscard]] std::size_t size() const noexcept { return profiles_.size(); }
  [[nodiscard]] bool empty() const noexcept { return profiles_.empty(); }
  [[nodiscard]] double max_radius() const noexcept { return max_radius_m_; }
  [[nodiscard]] std::span<const PlaceProfile> profiles() const noexcept { return profiles_; }
  [[nodiscard]] double cell_lat_deg() const noexcept { return cell_lat_deg_; }
  [[nodiscard]] double cell_lng_deg() const noexcept { return cell_lng_deg_; }

 private:
  // Unchecked query for any radius; used by knn to grow past max_radius.
  std::vector<NeighborHit> query_unchecked(GeoPoint center, double radius_m,
                                           std::optional<std::string_view> exclude_id) const;
  [[nodiscard]] std::int64_t lat_cell(double latitude) const noexcept;
  [[nodiscard]] std::int64_t lng_cell(double longitude) const noexcept;
  static std::uint64_t cell_key(std::int64_t lat_cell, std::int64_t lng_cell) noexcept;

  std::span<const PlaceProfile> profiles_;
  double max_radius_m_ = 1000.0;
  double cell_lat_deg_ = 1.0;
  double cell_lng_deg_ = 1.0;
  std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> cells_;
};

/// Convenience wrapper matching the index constructor.
SpatialIndex build_index(std::span<const PlaceProfile> profiles, double max_radius_m);

}  // namespace checkin
