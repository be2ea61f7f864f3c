#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "checkin/core.hpp"

namespace checkin {

struct BoundingBox {
  double min_latitude = -90.0;
  double max_latitude = 90.0;
  double min_longitude = -180.0;
  double max_longitude = 180.0;

  /// Throws DomainError unless min < max on both axes.
  void validate() const;
  [[nodiscard]] bool contains(GeoPoint p) const noexcept;

  static BoundingBox singapore() { return {1.15, 1.48, 103.59, 104.10}; }
  static BoundingBox world() { return {}; }
};

struct Rejection {
  std::size_t line_no = 0;  // 1-based
  std::string reason;
  std::string raw;
};

struct ParseResult {
  std::vector<PlaceProfile> profiles;
  std::vector<Rejection> rejected;
};

/// Reads line-delimited JSON records shaped like Graph API page objects:
/// id, name, category, category_list[].name, checkins, likes,
/// location.latitude, location.longitude. Bad lines are rejected with a
/// reason and never abort the stream. `is_food` is left false; it is set by
/// filter_scope / make_dataset against a food list.
ParseResult parse_profiles(std::istream& in);
ParseResult parse_profiles_file(const std::filesystem::path& path);

/// One Graph-API-shaped JSON object, the inverse of parse_profiles.
nlohmann::json profile_to_json(const PlaceProfile& profile);
void write_profiles_jsonl(std::ostream& out, const std::vector<PlaceProfile>& profiles);
/// {line_no, reason, raw} per line.
void write_rejects_jsonl(std::ostream& out, const std::vector<Rejection>& rejected);

/// Keeps profiles inside `box` (and carrying a food label when food_only)
/// and sets is_food on every retained profile. Idempotent.
std::vector<PlaceProfile> filter_scope(const std::vector<PlaceProfile>& profiles,
                                       const BoundingBox& box, const FoodCategoryList& food,
                                       bool food_only);

/// Distinct normalized labels, lexicographic. Throws on empty input.
CategoryVocabulary build_vocabulary(const std::vector<PlaceProfile>& profiles);

/// Builds the vocabulary and sets is_food flags.
Dataset make_dataset(std::vector<PlaceProfile> profiles, FoodCategoryList food_list);

/// Food category list file: one label per line, '#' starts a comment.
FoodCategoryList load_food_list(const std::filesystem::path& path);
FoodCategoryList load_food_list(std::istream& in);

struct CategorySummaryRow {
  std::string label;
  Count business_count = 0;
  Count total_checkins = 0;
  double expected_checkins_per_business = 0.0;
  /// Share of carrying businesses with check-ins strictly above expected.
  double pct_above_expected = 0.0;
};

/// One row per label, sorted by business_count descending (label ascending on ties).
std::vector<CategorySummaryRow> category_summary(const std::vector<PlaceProfile>& profiles);
/// label,count,total_checkins,expected,pct_above
void write_category_summary_csv(std::ostream& out, const std::vector<CategorySummaryRow>& rows);

/// Self-contained dataset bundle {profiles, vocabulary, food_list}.
nlohmann::json dataset_to_json(const Dataset& dataset);
Dataset dataset_from_json(const nlohmann::json& doc);
void save_dataset(const Dataset& dataset, const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path);

struct SynthConfig {
  std::size_t n_profiles = 2000;
  std::size_t n_hotspot_centers = 5;
  BoundingBox box{1.280, 1.316, 103.830, 103.866};
  /// Attractor intensity falls off as exp(-d / decay_scale_m).
  double decay_scale_m = 120.0;
  /// Sigma of the log-normal multiplicative noise on check-ins.
  double noise_sigma = 0.3;
  std::size_t category_pool_size = 40;
  std::uint64_t seed = 1;

  double base_checkins = 30.0;
  /// Peak intensity multiplier at an attractor, before category scaling.
  double attractor_gain = 60.0;
  /// Fraction of profiles scattered around attractors rather than uniformly.
  double clustered_fraction = 0.6;
  /// Standard deviation of the scatter around an attractor, meters.
  double cluster_spread_m = 200.0;
  double food_fraction = 0.6;
  /// Sigma of the per-category log multiplier.
  double category_sigma = 1.0;
  /// Food businesses feel the labels of food businesses within this radius.
  double spillover_radius_m = 150.0;
  /// Scale of that neighbor-label effect on the log multiplier.
  double spillover_sigma = 0.5;
  /// Share of the attractor gain that non-food businesses receive.
  double non_food_response = 0.3;

  /// Throws DomainError on an invalid configuration.
  void validate() const;
};

/// Deterministic synthetic city for a seed. Profiles near latent attractors
/// get more check-ins; per-category multipliers and log-normal noise make
/// the check-in distribution heavy-tailed.
Dataset synth_generate(const SynthConfig& cfg);

}  // namespace checkin
