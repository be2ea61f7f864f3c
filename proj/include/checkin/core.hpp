#pragma once

// Domain types shared by every module: places, category vocabularies,
// chunk masks, feature vectors and the in-memory dataset.

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace checkin {

using Count = std::int64_t;

/// Raised for malformed inputs that violate an operation's preconditions.
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a file or stream cannot be read or written.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct GeoPoint {
  double latitude = 0.0;
  double longitude = 0.0;

  [[nodiscard]] bool valid() const noexcept;
  friend bool operator==(const GeoPoint&, const GeoPoint&) = default;
};

/// One business. `categories` is kept sorted, unique and normalized.
struct PlaceProfile {
  std::string id;
  std::string name;
  std::vector<std::string> categories;
  GeoPoint location;
  Count checkins = 0;
  Count likes = 0;
  bool is_food = false;

  friend bool operator==(const PlaceProfile&, const PlaceProfile&) = default;
};

/// Lowercases ASCII letters, trims and collapses internal whitespace runs.
std::string normalize_label(std::string_view label);

/// Normalizes, sorts and deduplicates; empty labels are dropped.
std::vector<std::string> normalize_labels(std::span<const std::string> labels);

class FoodCategoryList {
 public:
  FoodCategoryList() = default;
  explicit FoodCategoryList(std::span<const std::string> labels);
  FoodCategoryList(std::initializer_list<std::string> labels);

  [[nodiscard]] bool contains(std::string_view label) const;
  /// True when any of the (normalized) labels is a food label.
  [[nodiscard]] bool intersects(std::span<const std::string> labels) const;
  [[nodiscard]] const std::vector<std::string>& labels() const noexcept { return labels_; }
  [[nodiscard]] bool empty() const noexcept { return labels_.empty(); }
  [[nodiscard]] std::size_t size() const noexcept { return labels_.size(); }

 private:
  std::vector<std::string> labels_;
};

/// Bijection between category labels and [0, V), in lexicographic order.
class CategoryVocabulary {
 public:
  CategoryVocabulary() = default;
  /// Labels are normalized, sorted and deduplicated.
  explicit CategoryVocabulary(std::span<const std::string> labels);

  [[nodiscard]] std::size_t size() const noexcept { return labels_.size(); }
  [[nodiscard]] const std::vector<std::string>& labels() const noexcept { return labels_; }
  [[nodiscard]] const std::string& label(std::size_t index) const { return labels_.at(index); }
  [[nodiscard]] std::optional<std::size_t> find(std::string_view label) const;
  /// Throws DomainError naming the label when it is not in the vocabulary.
  [[nodiscard]] std::size_t index_of(std::string_view label) const;

  friend bool operator==(const CategoryVocabulary&, const CategoryVocabulary&) = default;

 private:
  std::vector<std::string> labels_;
};

inline constexpr std::size_t kHotspotCount = 20;

/// The fixed ladder of hotspot radii: 50, 100, ..., 1000 meters.
inline constexpr std::array<double, kHotspotCount> kHotspotRadii = {
    50.0,  100.0, 150.0, 200.0, 250.0, 300.0, 350.0, 400.0, 450.0, 500.0,
    550.0, 600.0, 650.0, 700.0, 750.0, 800.0, 850.0, 900.0, 950.0, 1000.0};

inline constexpr std::size_t kChunkCount = 6;

/// Selects which of the six feature chunks C1..C6 a model variant uses.
/// Character i of the string form maps to chunk C(i+1), e.g. "110100".
class ChunkMask {
 public:
  constexpr ChunkMask() = default;
  constexpr explicit ChunkMask(std::array<bool, kChunkCount> bits) : bits_(bits) {}

  static ChunkMask all();
  static ChunkMask parse(std::string_view text);
  /// The 63 non-empty masks, ordered by their binary value 000001..111111.
  static std::vector<ChunkMask> enumerate_nonempty();

  [[nodiscard]] bool test(std::size_t chunk) const { return bits_.at(chunk); }
  [[nodiscard]] bool any() const noexcept;
  [[nodiscard]] std::size_t count() const noexcept;
  [[nodiscard]] std::string to_string() const;
  [[nodiscard]] const std::array<bool, kChunkCount>& bits() const noexcept { return bits_; }

  friend bool operator==(const ChunkMask&, const ChunkMask&) = default;

 private:
  std::array<bool, kChunkCount> bits_{};
};

/// Six concatenated chunks. Hotspot chunks are in ln(1 + check-ins) units.
struct FeatureVector {
  std::vector<double> c1;  // target categories, one-hot
  std::vector<double> c2;  // neighbor category counts
  std::array<double, kHotspotCount> c3{};  // food hotspots, total
  std::array<double, kHotspotCount> c4{};  // food hotspots, average
  std::array<double, kHotspotCount> c5{};  // all hotspots, total
  std::array<double, kHotspotCount> c6{};  // all hotspots, average

  [[nodiscard]] std::span<const double> chunk(std::size_t index) const;
  [[nodiscard]] std::size_t size() const noexcept;
  [[nodiscard]] std::vector<double> flatten() const;

  friend bool operator==(const FeatureVector&, const FeatureVector&) = default;
};

struct Dataset {
  std::vector<PlaceProfile> profiles;
  CategoryVocabulary vocabulary;
  FoodCategoryList food_list;
};

struct Violation {
  std::string profile_id;
  std::string rule;
  std::string detail;
};

/// Checks every type invariant; an empty result means the dataset is valid.
std::vector<Violation> dataset_validate(const Dataset& dataset);

/// ln(1 + count). Throws DomainError for negative or non-finite input.
double log1p_score(double count);

/// Inverse of log1p_score: exp(score) - 1.
double expm1_score(double score);

}  // namespace checkin
