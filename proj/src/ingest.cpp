#include "checkin/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <unordered_set>

namespace checkin {

using nlohmann::json;

void BoundingBox::validate() const {
  if (!(min_latitude < max_latitude) || !(min_longitude < max_longitude)) {
    throw DomainError("bounding box must satisfy min < max on both axes");
  }
}

bool BoundingBox::contains(GeoPoint p) const noexcept {
  return p.latitude >= min_latitude && p.latitude <= max_latitude &&
         p.longitude >= min_longitude && p.longitude <= max_longitude;
}

namespace {

// Distinguishes a rejected record from a parsed one without exceptions
// leaking out of the per-line loop.
struct LineError {
  std::string reason;
};

std::optional<double> number_field(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (it->is_number()) return it->get<double>();
  if (it->is_string()) {
    const auto& text = it->get_ref<const std::string&>();
    try {
      std::size_t used = 0;
      double value = std::stod(text, &used);
      if (used == text.size()) return value;
    } catch (const std::exception&) {
    }
  }
  throw LineError{std::string("invalid ") + key};
}

std::optional<Count> count_field(const json& obj, const char* key) {
  auto value = number_field(obj, key);
  if (!value) return std::nullopt;
  if (!std::isfinite(*value) || *value < 0.0 || std::floor(*value) != *value ||
      *value > 9.0e15) {
    throw LineError{std::string("invalid ") + key};
  }
  return static_cast<Count>(*value);
}

PlaceProfile parse_record(const json& obj) {
  if (!obj.is_object()) throw LineError{"not a JSON object"};

  PlaceProfile p;
  auto id = obj.find("id");
  if (id == obj.end() || id->is_null()) throw LineError{"missing id"};
  if (id->is_string()) {
    p.id = id->get<std::string>();
  } else if (id->is_number_integer()) {
    p.id = id->dump();
  } else {
    throw LineError{"invalid id"};
  }
  if (p.id.empty()) throw LineError{"missing id"};

  if (auto name = obj.find("name"); name != obj.end() && name->is_string()) {
    p.name = name->get<std::string>();
  }

  std::vector<std::string> raw_labels;
  if (auto cat = obj.find("category"); cat != obj.end() && cat->is_string()) {
    raw_labels.push_back(cat->get<std::string>());
  }
  if (auto list = obj.find("category_list"); list != obj.end() && list->is_array()) {
    for (const auto& entry : *list) {
      if (entry.is_object()) {
        if (auto name = entry.find("name"); name != entry.end() && name->is_string()) {
          raw_labels.push_back(name->get<std::string>());
        }
      } else if (entry.is_string()) {
        raw_labels.push_back(entry.get<std::string>());
      }
    }
  }
  p.categories = normalize_labels(raw_labels);
  if (p.categories.empty()) throw LineError{"no categories"};

  auto checkins = count_field(obj, "checkins");
  if (!checkins) throw LineError{"no checkins"};
  p.checkins = *checkins;
  p.likes = count_field(obj, "likes").value_or(0);

  auto loc = obj.find("location");
  if (loc == obj.end() || !loc->is_object()) throw LineError{"no coordinates"};
  auto lat = number_field(*loc, "latitude");
  auto lng = number_field(*loc, "longitude");
  if (!lat || !lng) throw LineError{"no coordinates"};
  p.location = {*lat, *lng};
  if (!p.location.valid()) throw LineError{"coordinates out of range"};
  return p;
}

}  // namespace

ParseResult parse_profiles(std::istream& in) {
  ParseResult result;
  std::unordered_set<std::string> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (std::all_of(line.begin(), line.end(),
                    [](unsigned char c) { return std::isspace(c) != 0; })) {
      continue;
    }
    try {
      json obj = json::parse(line);
      PlaceProfile p = parse_record(obj);
      if (!ids.insert(p.id).second) throw LineError{"duplicate id"};
      result.profiles.push_back(std::move(p));
    } catch (const json::parse_error&) {
      result.rejected.push_back({line_no, "invalid json", line});
    } catch (const LineError& e) {
      result.rejected.push_back({line_no, e.reason, line});
    } catch (const json::exception& e) {
      result.rejected.push_back({line_no, std::string("invalid record: ") + e.what(), line});
    }
  }
  if (in.bad()) throw IoError("error while reading profile stream");
  return result;
}

ParseResult parse_profiles_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open profiles file: " + path.string());
  return parse_profiles(in);
}

json profile_to_json(const PlaceProfile& profile) {
  json categories = json::array();
  for (const auto& label : profile.categories) categories.push_back({{"name", label}});
  json obj = {
      {"id", profile.id},
      {"name", profile.name},
      {"category_list", std::move(categories)},
      {"checkins", profile.checkins},
      {"likes", profile.likes},
      {"location",
       {{"latitude", profile.location.latitude}, {"longitude", profile.location.longitude}}},
  };
  if (!profile.categories.empty()) obj["category"] = profile.categories.front();
  return obj;
}

void write_profiles_jsonl(std::ostream& out, const std::vector<PlaceProfile>& profiles) {
  for (const auto& p : profiles) out << profile_to_json(p).dump() << '\n';
}

void write_rejects_jsonl(std::ostream& out, const std::vector<Rejection>& rejected) {
  for (const auto& r : rejected) {
    out << json{{"line_no", r.line_no}, {"reason", r.reason}, {"raw", r.raw}}.dump(
               -1, ' ', false, json::error_handler_t::replace)
        << '\n';
  }
}

std::vector<PlaceProfile> filter_scope(const std::vector<PlaceProfile>& profiles,
                                       const BoundingBox& box, const FoodCategoryList& food,
                                       bool food_only) {
  std::vector<PlaceProfile> kept;
  for (const auto& p : profiles) {
    if (!box.contains(p.location)) continue;
    bool is_food = food.intersects(p.categories);
    if (food_only && !is_food) continue;
    kept.push_back(p);
    kept.back().is_food = is_food;
  }
  return kept;
}

CategoryVocabulary build_vocabulary(const std::vector<PlaceProfile>& profiles) {
  if (profiles.empty()) throw DomainError("cannot build a vocabulary from zero profiles");
  std::vector<std::string> labels;
  for (const auto& p : profiles) labels.insert(labels.end(), p.categories.begin(), p.categories.end());
  return CategoryVocabulary(labels);
}

Dataset make_dataset(std::vector<PlaceProfile> profiles, FoodCategoryList food_list) {
  Dataset d;
  d.vocabulary = build_vocabulary(profiles);
  for (auto& p : profiles) p.is_food = food_list.intersects(p.categories);
  d.profiles = std::move(profiles);
  d.food_list = std::move(food_list);
  return d;
}

FoodCategoryList load_food_list(std::istream& in) {
  std::vector<std::string> labels;
  std::string line;
  while (std::getline(in, line)) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    auto label = normalize_label(line);
    if (!label.empty()) labels.push_back(std::move(label));
  }
  if (labels.empty()) throw DomainError("food category list is empty");
  return FoodCategoryList(labels);
}

FoodCategoryList load_food_list(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open food category list: " + path.string());
  return load_food_list(in);
}

std::vector<CategorySummaryRow> category_summary(const std::vector<PlaceProfile>& profiles) {
  std::map<std::string, std::vector<Count>> by_label;
  for (const auto& p : profiles) {
    for (const auto& label : p.categories) by_label[label].push_back(p.checkins);
  }

  std::vector<CategorySummaryRow> rows;
  rows.reserve(by_label.size());
  for (const auto& [label, counts] : by_label) {
    CategorySummaryRow row;
    row.label = label;
    row.business_count = static_cast<Count>(counts.size());
    for (Count c : counts) row.total_checkins += c;
    row.expected_checkins_per_business =
        static_cast<double>(row.total_checkins) / static_cast<double>(row.business_count);
    // Compare c * count > total in integers to avoid rounding at the boundary.
    auto above = std::count_if(counts.begin(), counts.end(), [&](Count c) {
      return c * row.business_count > row.total_checkins;
    });
    row.pct_above_expected =
        100.0 * static_cast<double>(above) / static_cast<double>(row.business_count);
    rows.push_back(std::move(row));
  }
  std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
    return a.business_count > b.business_count;
  });
  return rows;
}

namespace {

std::string csv_field(const std::string& text) {
  if (text.find_first_of(",\"\n") == std::string::npos) return text;
  std::string quoted = "\"";
  for (char c : text) {
    if (c == '"') quoted += '"';
    quoted += c;
  }
  return quoted + '"';
}

}  // namespace

void write_category_summary_csv(std::ostream& out, const std::vector<CategorySummaryRow>& rows) {
  out << "label,count,total_checkins,expected,pct_above\n";
  std::ostringstream line;
  for (const auto& row : rows) {
    line.str({});
    line << std::fixed << std::setprecision(2) << csv_field(row.label) << ','
         << row.business_count << ',' << row.total_checkins << ','
         << row.expected_checkins_per_business << ',' << row.pct_above_expected << '\n';
    out << line.str();
  }
}

json dataset_to_json(const Dataset& dataset) {
  json profiles = json::array();
  for (const auto& p : dataset.profiles) {
    json obj = profile_to_json(p);
    obj["is_food"] = p.is_food;
    profiles.push_back(std::move(obj));
  }
  return {
      {"format", "checkin-dataset"},
      {"format_version", 1},
      {"vocabulary", dataset.vocabulary.labels()},
      {"food_list", dataset.food_list.labels()},
      {"profiles", std::move(profiles)},
  };
}

Dataset dataset_from_json(const json& doc) {
  if (!doc.is_object() || doc.value("format", "") != "checkin-dataset") {
    throw DomainError("not a dataset bundle");
  }
  if (doc.value("format_version", 0) != 1) {
    throw DomainError("unsupported dataset format_version");
  }
  Dataset d;
  d.vocabulary = CategoryVocabulary(doc.at("vocabulary").get<std::vector<std::string>>());
  d.food_list = FoodCategoryList(doc.at("food_list").get<std::vector<std::string>>());
  const auto& profiles = doc.at("profiles");
  d.profiles.reserve(profiles.size());
  for (const auto& obj : profiles) {
    try {
      PlaceProfile p = parse_record(obj);
      p.is_food = obj.value("is_food", false);
      d.profiles.push_back(std::move(p));
    } catch (const LineError& e) {
      throw DomainError("invalid profile in dataset bundle: " + e.reason);
    }
  }
  return d;
}

void save_dataset(const Dataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write dataset file: " + path.string());
  out << dataset_to_json(dataset).dump() << '\n';
  if (!out) throw IoError("error while writing dataset file: " + path.string());
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open dataset file: " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw DomainError("dataset file is not valid JSON: " + std::string(e.what()));
  }
  return dataset_from_json(doc);
}

}  // namespace checkin
