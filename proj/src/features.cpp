#include "checkin/features.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

namespace checkin {

void FeatureConfig::validate() const {
  if (!(category_neighbor_radius_m > 0.0 && category_neighbor_radius_m <= 1000.0)) {
    throw DomainError("category neighbor radius must be in (0, 1000] meters");
  }
  if (hotspot_radii != kHotspotRadii) {
    throw DomainError("hotspot radii must be the fixed 50..1000 m ladder");
  }
}

double FeatureConfig::max_radius() const noexcept {
  return std::max(category_neighbor_radius_m, hotspot_radii.back());
}

namespace {

void check_ladder(std::span<const double> radii) {
  if (radii.size() != kHotspotCount ||
      !std::equal(radii.begin(), radii.end(), kHotspotRadii.begin())) {
    throw DomainError("hotspot radii must be the fixed 50..1000 m ladder");
  }
}

// Hits must be sorted by distance ascending.
std::array<double, kHotspotCount> hotspots_from_hits(std::span<const NeighborHit> hits,
                                                     std::span<const double> radii,
                                                     bool food_only, HotspotMode mode) {
  std::array<double, kHotspotCount> out{};
  double total = 0.0;
  Count count = 0;
  std::size_t h = 0;
  for (std::size_t r = 0; r < radii.size(); ++r) {
    for (; h < hits.size() && hits[h].distance_m <= radii[r]; ++h) {
      const auto& p = *hits[h].profile;
      if (food_only && !p.is_food) continue;
      total += static_cast<double>(p.checkins);
      ++count;
    }
    const double value =
        mode == HotspotMode::total ? total : total / static_cast<double>(std::max<Count>(1, count));
    out[r] = std::log1p(value);
  }
  return out;
}

std::vector<double> category_counts_from_hits(std::span<const NeighborHit> hits, double radius,
                                              const CategoryVocabulary& vocab) {
  std::vector<double> out(vocab.size(), 0.0);
  for (const auto& hit : hits) {
    if (hit.distance_m > radius) break;
    const auto& p = *hit.profile;
    if (!p.is_food) continue;
    for (const auto& label : p.categories) out[vocab.index_of(label)] += 1.0;
  }
  return out;
}

}  // namespace

std::vector<double> encode_target_categories(std::span<const std::string> categories,
                                             const CategoryVocabulary& vocab) {
  std::vector<double> out(vocab.size(), 0.0);
  for (const auto& label : categories) out[vocab.index_of(label)] = 1.0;
  return out;
}

std::vector<double> neighbor_category_counts(const SpatialIndex& index, GeoPoint center,
                                             const CategoryVocabulary& vocab,
                                             const FeatureConfig& cfg,
                                             std::optional<std::string_view> exclude_id) {
  cfg.validate();
  auto hits = index.radius_query(center, cfg.category_neighbor_radius_m, exclude_id);
  return category_counts_from_hits(hits, cfg.category_neighbor_radius_m, vocab);
}

std::array<double, kHotspotCount> hotspot_profile(const SpatialIndex& index, GeoPoint center,
                                                  std::span<const double> radii, bool food_only,
                                                  HotspotMode mode,
                                                  std::optional<std::string_view> exclude_id) {
  check_ladder(radii);
  auto hits = index.radius_query(center, radii.back(), exclude_id);
  return hotspots_from_hits(hits, radii, food_only, mode);
}

FeatureVector extract_features(GeoPoint center, std::span<const std::string> categories,
                               const SpatialIndex& index, const CategoryVocabulary& vocab,
                               const FeatureConfig& cfg,
                               std::optional<std::string_view> exclude_id) {
  cfg.validate();
  FeatureVector fv;
  fv.c1 = encode_target_categories(categories, vocab);
  // One query at the largest radius serves every chunk.
  auto hits = index.radius_query(center, cfg.max_radius(), exclude_id);
  fv.c2 = category_counts_from_hits(hits, cfg.category_neighbor_radius_m, vocab);
  fv.c3 = hotspots_from_hits(hits, cfg.hotspot_radii, true, HotspotMode::total);
  fv.c4 = hotspots_from_hits(hits, cfg.hotspot_radii, true, HotspotMode::average);
  fv.c5 = hotspots_from_hits(hits, cfg.hotspot_radii, false, HotspotMode::total);
  fv.c6 = hotspots_from_hits(hits, cfg.hotspot_radii, false, HotspotMode::average);
  return fv;
}

std::vector<double> apply_mask(const FeatureVector& fv, ChunkMask mask) {
  if (!mask.any()) throw DomainError("chunk mask selects no chunks");
  std::vector<double> out;
  std::size_t total = 0;
  for (std::size_t i = 0; i < kChunkCount; ++i) {
    if (mask.test(i)) total += fv.chunk(i).size();
  }
  out.reserve(total);
  for (std::size_t i = 0; i < kChunkCount; ++i) {
    if (!mask.test(i)) continue;
    auto part = fv.chunk(i);
    out.insert(out.end(), part.begin(), part.end());
  }
  return out;
}

std::size_t masked_dimension(std::size_t vocab_size, ChunkMask mask) {
  std::size_t dim = 0;
  for (std::size_t i = 0; i < kChunkCount; ++i) {
    if (mask.test(i)) dim += i < 2 ? vocab_size : kHotspotCount;
  }
  return dim;
}

std::vector<std::string> feature_names(const CategoryVocabulary& vocab, ChunkMask mask) {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < kChunkCount; ++i) {
    if (!mask.test(i)) continue;
    const std::string prefix = "c" + std::to_string(i + 1) + "_";
    if (i < 2) {
      for (const auto& label : vocab.labels()) names.push_back(prefix + label);
    } else {
      for (double r : kHotspotRadii) names.push_back(prefix + std::to_string(static_cast<int>(r)));
    }
  }
  return names;
}

void write_feature_csv(std::ostream& out, const CategoryVocabulary& vocab,
                       const std::vector<FeatureVector>& rows,
                       std::span<const Count> target_checkins) {
  if (rows.size() != target_checkins.size()) {
    throw DomainError("feature rows and targets differ in length");
  }
  auto quote = [](const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) {
      if (c == '"') q += '"';
      q += c;
    }
    return q + '"';
  };
  for (const auto& name : feature_names(vocab)) out << quote(name) << ',';
  out << "target_checkins\n";
  const auto old_precision = out.precision(17);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (double v : rows[r].flatten()) out << v << ',';
    out << target_checkins[r] << '\n';
  }
  out.precision(old_precision);
}

}  // namespace checkin
