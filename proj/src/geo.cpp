#include "checkin/geo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace checkin {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;
constexpr double kMetersPerDegree = kEarthRadiusMeters * kDegToRad;
// Relative pad on bounding-box prefilters so rounding never drops a hit.
constexpr double kPad = 1.0 + 1e-9;

bool hit_less(const NeighborHit& a, const NeighborHit& b) {
  if (a.distance_m != b.distance_m) return a.distance_m < b.distance_m;
  return a.profile->id < b.profile->id;
}

}  // namespace

double haversine(GeoPoint a, GeoPoint b) noexcept {
  const double phi1 = a.latitude * kDegToRad;
  const double phi2 = b.latitude * kDegToRad;
  const double dphi = phi2 - phi1;
  const double dlambda = (b.longitude - a.longitude) * kDegToRad;
  const double s1 = std::sin(dphi / 2.0);
  const double s2 = std::sin(dlambda / 2.0);
  double h = s1 * s1 + std::cos(phi1) * std::cos(phi2) * s2 * s2;
  h = std::clamp(h, 0.0, 1.0);
  return 2.0 * kEarthRadiusMeters * std::asin(std::sqrt(h));
}

SpatialIndex::SpatialIndex(std::span<const PlaceProfile> profiles, double max_radius_m)
    : profiles_(profiles), max_radius_m_(max_radius_m) {
  if (!(max_radius_m > 0.0) || !std::isfinite(max_radius_m)) {
    throw DomainError("spatial index max radius must be positive");
  }
  if (profiles.size() > std::numeric_limits<std::uint32_t>::max()) {
    throw DomainError("too many profiles for the spatial index");
  }

  double mean_lat = 0.0;
  for (const auto& p : profiles) {
    if (!p.location.valid()) throw DomainError("profile '" + p.id + "' has an invalid location");
    mean_lat += p.location.latitude;
  }
  if (!profiles.empty()) mean_lat /= static_cast<double>(profiles.size());

  cell_lat_deg_ = max_radius_m / kMetersPerDegree;
  const double cos_lat = std::max(std::cos(std::min(std::abs(mean_lat), 89.0) * kDegToRad), 1e-3);
  cell_lng_deg_ = cell_lat_deg_ / cos_lat;

  cells_.reserve(profiles.size());
  for (std::size_t i = 0; i < profiles.size(); ++i) {
    const auto& loc = profiles[i].location;
    cells_[cell_key(lat_cell(loc.latitude), lng_cell(loc.longitude))].push_back(
        static_cast<std::uint32_t>(i));
  }
}

std::int64_t SpatialIndex::lat_cell(double latitude) const noexcept {
  return static_cast<std::int64_t>(std::floor((latitude + 90.0) / cell_lat_deg_));
}

std::int64_t SpatialIndex::lng_cell(double longitude) const noexcept {
  return static_cast<std::int64_t>(std::floor((longitude + 180.0) / cell_lng_deg_));
}

std::uint64_t SpatialIndex::cell_key(std::int64_t lat_cell, std::int64_t lng_cell) noexcept {
  return (static_cast<std::uint64_t>(lat_cell) << 32) ^
         static_cast<std::uint64_t>(static_cast<std::uint32_t>(lng_cell));
}

std::vector<NeighborHit> SpatialIndex::radius_query(
    GeoPoint center, double radius_m, std::optional<std::string_view> exclude_id) const {
  if (!(radius_m > 0.0) || radius_m > max_radius_m_) {
    throw DomainError("query radius must be in (0, " + std::to_string(max_radius_m_) + "] meters");
  }
  if (!center.valid()) throw DomainError("query center is not a valid coordinate");
  return query_unchecked(center, radius_m, exclude_id);
}

std::vector<NeighborHit> SpatialIndex::query_unchecked(
    GeoPoint center, double radius_m, std::optional<std::string_view> exclude_id) const {
  std::vector<NeighborHit> hits;
  if (profiles_.empty()) return hits;

  auto consider = [&](std::uint32_t i) {
    const auto& p = profiles_[i];
    if (exclude_id && p.id == *exclude_id) return;
    const double d = haversine(center, p.location);
    if (d <= radius_m) hits.push_back({i, &p, d});
  };

  // Angular radius; any hit lies within dlat of the center latitude and
  // within asin(sin(delta)/cos(lat)) of its longitude.
  const double delta = radius_m / kEarthRadiusMeters;
  const double dlat_deg = delta / kDegToRad * kPad;
  const double cos_lat = std::cos(center.latitude * kDegToRad);
  const double sin_delta = std::sin(std::min(delta, std::numbers::pi / 2.0));
  const bool all_longitudes =
      delta >= std::numbers::pi / 2.0 || sin_delta >= cos_lat * (1.0 - 1e-12) ||
      center.latitude + dlat_deg >= 90.0 || center.latitude - dlat_deg <= -90.0;

  const std::int64_t lat_lo = lat_cell(std::max(center.latitude - dlat_deg, -90.0));
  const std::int64_t lat_hi = lat_cell(std::min(center.latitude + dlat_deg, 90.0));
  std::int64_t lng_lo = 0;
  std::int64_t lng_hi = 0;
  if (!all_longitudes) {
    const double dlng_deg = std::asin(sin_delta / cos_lat) / kDegToRad * kPad;
    lng_lo = lng_cell(std::max(center.longitude - dlng_deg, -180.0));
    lng_hi = lng_cell(std::min(center.longitude + dlng_deg, 180.0));
  }

  const auto block_cells = static_cast<std::uint64_t>(lat_hi - lat_lo + 1) *
                           static_cast<std::uint64_t>(all_longitudes ? 0 : lng_hi - lng_lo + 1);
  if (all_longitudes || block_cells > cells_.size()) {
    // Sparse or very wide query: walk occupied cells instead of the block.
    for (const auto& [key, members] : cells_) {
      const auto lat_c = static_cast<std::int64_t>(key >> 32);
      if (lat_c < lat_lo || lat_c > lat_hi) continue;
      for (std::uint32_t i : members) consider(i);
    }
  } else {
    for (std::int64_t la = lat_lo; la <= lat_hi; ++la) {
      for (std::int64_t ln = lng_lo; ln <= lng_hi; ++ln) {
        auto it = cells_.find(cell_key(la, ln));
        if (it == cells_.end()) continue;
        for (std::uint32_t i : it->second) consider(i);
      }
    }
  }
  std::sort(hits.begin(), hits.end(), hit_less);
  return hits;
}

std::vector<NeighborHit> SpatialIndex::knn(GeoPoint center, std::size_t k,
                                           std::optional<std::string_view> exclude_id) const {
  if (k == 0) throw DomainError("knn requires k >= 1");
  if (!center.valid()) throw DomainError("query center is not a valid coordinate");
  // Grow the search circle until it holds k hits or covers the whole sphere.
  const double whole_sphere = std::numbers::pi * kEarthRadiusMeters;
  double radius = max_radius_m_;
  for (;;) {
    auto hits = query_unchecked(center, std::min(radius, whole_sphere), exclude_id);
    if (hits.size() >= k || radius >= whole_sphere) {
      if (hits.size() > k) hits.resize(k);
      return hits;
    }
    radius *= 4.0;
  }
}

SpatialIndex build_index(std::span<const PlaceProfile> profiles, double max_radius_m) {
  return SpatialIndex(profiles, max_radius_m);
}

}  // namespace checkin
