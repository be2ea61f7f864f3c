#include "checkin/core.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <unordered_set>

namespace checkin {

bool GeoPoint::valid() const noexcept {
  return std::isfinite(latitude) && std::isfinite(longitude) && latitude >= -90.0 &&
         latitude <= 90.0 && longitude >= -180.0 && longitude <= 180.0;
}

std::string normalize_label(std::string_view label) {
  std::string out;
  out.reserve(label.size());
  bool pending_space = false;
  for (char ch : label) {
    auto uch = static_cast<unsigned char>(ch);
    if (std::isspace(uch)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    out.push_back(static_cast<char>(std::tolower(uch)));
  }
  return out;
}

std::vector<std::string> normalize_labels(std::span<const std::string> labels) {
  std::vector<std::string> out;
  out.reserve(labels.size());
  for (const auto& label : labels) {
    auto normalized = normalize_label(label);
    if (!normalized.empty()) out.push_back(std::move(normalized));
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

FoodCategoryList::FoodCategoryList(std::span<const std::string> labels)
    : labels_(normalize_labels(labels)) {}

FoodCategoryList::FoodCategoryList(std::initializer_list<std::string> labels)
    : FoodCategoryList(std::span<const std::string>(labels.begin(), labels.size())) {}

bool FoodCategoryList::contains(std::string_view label) const {
  return std::binary_search(labels_.begin(), labels_.end(), normalize_label(label));
}

bool FoodCategoryList::intersects(std::span<const std::string> labels) const {
  return std::any_of(labels.begin(), labels.end(),
                     [this](const std::string& label) { return contains(label); });
}

CategoryVocabulary::CategoryVocabulary(std::span<const std::string> labels)
    : labels_(normalize_labels(labels)) {}

std::optional<std::size_t> CategoryVocabulary::find(std::string_view label) const {
  auto it = std::lower_bound(labels_.begin(), labels_.end(), label);
  if (it == labels_.end() || *it != label) return std::nullopt;
  return static_cast<std::size_t>(it - labels_.begin());
}

std::size_t CategoryVocabulary::index_of(std::string_view label) const {
  if (auto index = find(label)) return *index;
  throw DomainError("unknown category label: '" + std::string(label) + "'");
}

ChunkMask ChunkMask::all() {
  std::array<bool, kChunkCount> bits{};
  bits.fill(true);
  return ChunkMask(bits);
}

ChunkMask ChunkMask::parse(std::string_view text) {
  if (text.size() != kChunkCount) {
    throw DomainError("chunk mask must have 6 characters, got '" + std::string(text) + "'");
  }
  std::array<bool, kChunkCount> bits{};
  for (std::size_t i = 0; i < kChunkCount; ++i) {
    if (text[i] != '0' && text[i] != '1') {
      throw DomainError("chunk mask must contain only 0 and 1, got '" + std::string(text) + "'");
    }
    bits[i] = text[i] == '1';
  }
  return ChunkMask(bits);
}

std::vector<ChunkMask> ChunkMask::enumerate_nonempty() {
  std::vector<ChunkMask> masks;
  masks.reserve((1u << kChunkCount) - 1);
  for (unsigned value = 1; value < (1u << kChunkCount); ++value) {
    std::array<bool, kChunkCount> bits{};
    // Leftmost character (C1) is the most significant bit.
    for (std::size_t i = 0; i < kChunkCount; ++i) {
      bits[i] = ((value >> (kChunkCount - 1 - i)) & 1u) != 0;
    }
    masks.emplace_back(bits);
  }
  return masks;
}

bool ChunkMask::any() const noexcept {
  return std::any_of(bits_.begin(), bits_.end(), [](bool b) { return b; });
}

std::size_t ChunkMask::count() const noexcept {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), true));
}

std::string ChunkMask::to_string() const {
  std::string text(kChunkCount, '0');
  for (std::size_t i = 0; i < kChunkCount; ++i) {
    if (bits_[i]) text[i] = '1';
  }
  return text;
}

std::span<const double> FeatureVector::chunk(std::size_t index) const {
  switch (index) {
    case 0: return c1;
    case 1: return c2;
    case 2: return c3;
    case 3: return c4;
    case 4: return c5;
    case 5: return c6;
    default: throw std::out_of_range("chunk index out of range");
  }
}

std::size_t FeatureVector::size() const noexcept {
  return c1.size() + c2.size() + 4 * kHotspotCount;
}

std::vector<double> FeatureVector::flatten() const {
  std::vector<double> out;
  out.reserve(size());
  for (std::size_t i = 0; i < kChunkCount; ++i) {
    auto part = chunk(i);
    out.insert(out.end(), part.begin(), part.end());
  }
  return out;
}

std::vector<Violation> dataset_validate(const Dataset& dataset) {
  std::vector<Violation> violations;
  auto report = [&](const std::string& id, std::string rule, std::string detail) {
    violations.push_back({id, std::move(rule), std::move(detail)});
  };

  if (dataset.food_list.empty()) report("", "food_list_empty", "food category list has no labels");

  std::unordered_set<std::string> seen;
  seen.reserve(dataset.profiles.size());
  for (const auto& p : dataset.profiles) {
    if (!seen.insert(p.id).second) report(p.id, "duplicate_id", "id appears more than once");
    if (!p.location.valid()) {
      report(p.id, "coordinate_range",
             "latitude/longitude out of range or non-finite (" +
                 std::to_string(p.location.latitude) + ", " +
                 std::to_string(p.location.longitude) + ")");
    }
    if (p.categories.empty()) report(p.id, "categories_empty", "profile has no category");
    if (p.checkins < 0) report(p.id, "negative_checkins", std::to_string(p.checkins));
    if (p.likes < 0) report(p.id, "negative_likes", std::to_string(p.likes));
    for (const auto& label : p.categories) {
      if (!dataset.vocabulary.find(label)) {
        report(p.id, "unknown_category", "'" + label + "' missing from vocabulary");
      }
    }
    if (p.is_food != dataset.food_list.intersects(p.categories)) {
      report(p.id, "food_flag", p.is_food ? "flagged food without a food category"
                                          : "has a food category but not flagged food");
    }
  }
  return violations;
}

double log1p_score(double count) {
  if (!std::isfinite(count) || count < 0.0) {
    throw DomainError("log1p_score requires a finite non-negative count");
  }
  return std::log1p(count);
}

double expm1_score(double score) { return std::expm1(score); }

}  // namespace checkin
