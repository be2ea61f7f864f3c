#include "checkin/gbm.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>

#include "checkin/eval.hpp"

namespace checkin {

using nlohmann::json;

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) throw DomainError("matrix data size does not match shape");
}

Matrix Matrix::select_rows(std::span<const std::size_t> indices) const {
  Matrix out(indices.size(), cols_);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    auto src = row(indices[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

Matrix Matrix::select_cols(std::span<const std::size_t> indices) const {
  Matrix out(rows_, indices.size());
  for (std::size_t r = 0; r < rows_; ++r) {
    for (std::size_t c = 0; c < indices.size(); ++c) out(r, c) = (*this)(r, indices[c]);
  }
  return out;
}

std::size_t FeatureSubsample::resolve(std::size_t feature_count) const {
  std::size_t k = feature_count;
  switch (rule) {
    case Rule::sqrt:
      k = static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(feature_count))));
      // Guard against sqrt rounding just below an exact square.
      while ((k + 1) * (k + 1) <= feature_count) ++k;
      while (k * k > feature_count) --k;
      break;
    case Rule::all: break;
    case Rule::fixed: k = std::min(count, feature_count); break;
  }
  return std::max<std::size_t>(k, 1);
}

FeatureSubsample FeatureSubsample::parse(std::string_view text) {
  if (text == "sqrt") return {Rule::sqrt, 0};
  if (text == "all") return {Rule::all, 0};
  std::size_t value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size() || value == 0) {
    throw DomainError("feature subsample must be 'sqrt', 'all' or a positive integer");
  }
  return {Rule::fixed, value};
}

std::string FeatureSubsample::to_string() const {
  switch (rule) {
    case Rule::sqrt: return "sqrt";
    case Rule::all: return "all";
    case Rule::fixed: return std::to_string(count);
  }
  return "sqrt";
}

void GbmConfig::validate() const {
  if (n_iterations < 1) throw DomainError("n_iterations must be >= 1");
  if (!(learning_rate > 0.0 && learning_rate <= 1.0)) {
    throw DomainError("learning_rate must be in (0, 1]");
  }
  if (max_depth < 1) throw DomainError("max_depth must be >= 1");
  if (min_samples_leaf < 1) throw DomainError("min_samples_leaf must be >= 1");
  if (feature_subsample.rule == FeatureSubsample::Rule::fixed && feature_subsample.count == 0) {
    throw DomainError("fixed feature subsample must be positive");
  }
}

double RegressionTree::predict(std::span<const double> x) const {
  std::size_t i = 0;
  while (!nodes[i].is_leaf()) {
    const auto& n = nodes[i];
    i = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left
                                                                                        : n.right);
  }
  return nodes[i].value;
}

std::size_t RegressionTree::depth() const {
  if (nodes.empty()) return 0;
  std::vector<std::size_t> level(nodes.size(), 0);
  std::size_t deepest = 0;
  // Children always follow their parent in the node array.
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    deepest = std::max(deepest, level[i]);
    if (!nodes[i].is_leaf()) {
      level[static_cast<std::size_t>(nodes[i].left)] = level[i] + 1;
      level[static_cast<std::size_t>(nodes[i].right)] = level[i] + 1;
    }
  }
  return deepest;
}

std::size_t RegressionTree::split_count() const {
  return static_cast<std::size_t>(
      std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return !n.is_leaf(); }));
}

double GbmModel::predict(std::span<const double> x) const {
  return predict_staged(x, trees.size());
}

double GbmModel::predict_staged(std::span<const double> x, std::size_t n_trees) const {
  if (x.size() != feature_count) {
    throw DomainError("feature vector has " + std::to_string(x.size()) + " entries, model expects " +
                      std::to_string(feature_count));
  }
  n_trees = std::min(n_trees, trees.size());
  double acc = 0.0;
  for (std::size_t t = 0; t < n_trees; ++t) acc += trees[t].predict(x);
  return base_score + learning_rate * acc;
}

double predict(const GbmModel& model, std::span<const double> x) { return model.predict(x); }

namespace {

// Column-major copy of X with each value replaced by its rank among the
// feature's distinct values, so split search can bucket instead of sort.
struct Columns {
  std::size_t n = 0;
  std::size_t d = 0;
  std::vector<double> values;
  std::vector<std::uint32_t> rank;
  std::vector<std::vector<double>> distinct;

  [[nodiscard]] double value(std::size_t f, std::size_t row) const { return values[f * n + row]; }
  [[nodiscard]] std::uint32_t rank_of(std::size_t f, std::size_t row) const {
    return rank[f * n + row];
  }
};

Columns prepare_columns(const Matrix& X) {
  Columns c;
  c.n = X.rows();
  c.d = X.cols();
  c.values.resize(c.n * c.d);
  c.rank.resize(c.n * c.d);
  c.distinct.resize(c.d);
  std::vector<double> sorted(c.n);
  for (std::size_t f = 0; f < c.d; ++f) {
    for (std::size_t r = 0; r < c.n; ++r) c.values[f * c.n + r] = X(r, f);
    std::copy_n(c.values.begin() + static_cast<std::ptrdiff_t>(f * c.n), c.n, sorted.begin());
    std::sort(sorted.begin(), sorted.end());
    auto& uniq = c.distinct[f];
    uniq.assign(sorted.begin(), std::unique(sorted.begin(), sorted.end()));
    for (std::size_t r = 0; r < c.n; ++r) {
      c.rank[f * c.n + r] = static_cast<std::uint32_t>(
          std::lower_bound(uniq.begin(), uniq.end(), c.values[f * c.n + r]) - uniq.begin());
    }
  }
  return c;
}

// Residuals whose centered sum of squares falls below this fraction of
// their raw sum of squares are treated as constant.
constexpr double kConstantResidualTol = 1e-13;
// A split must remove at least this fraction of the node's centered SSE.
constexpr double kMinRelativeGain = 1e-12;

class TreeBuilder {
 public:
  TreeBuilder(const Columns& cols, const GbmConfig& cfg, std::mt19937_64& rng,
              std::vector<std::size_t>& split_counts)
      : cols_(cols), cfg_(cfg), rng_(rng), split_counts_(split_counts), rows_(cols.n),
        feature_pool_(cols.d), subsample_(cfg.feature_subsample.resolve(cols.d)) {
    std::iota(feature_pool_.begin(), feature_pool_.end(), std::size_t{0});
    std::size_t widest = 0;
    for (const auto& u : cols.distinct) widest = std::max(widest, u.size());
    bucket_count_.assign(widest, 0);
    bucket_sum_.assign(widest, 0.0);
  }

  // Fits one tree to `residual`; leaf_out[row] receives the leaf value of
  // every training row.
  RegressionTree build(std::span<const double> residual, std::span<double> leaf_out) {
    residual_ = residual;
    leaf_out_ = leaf_out;
    std::iota(rows_.begin(), rows_.end(), std::uint32_t{0});
    tree_ = RegressionTree{};
    grow(0, rows_.size(), 0);
    return std::move(tree_);
  }

 private:
  struct Split {
    bool found = false;
    std::size_t feature = 0;
    double threshold = 0.0;
    double gain = 0.0;
  };

  struct Group {
    std::uint32_t rank;
    std::size_t count;
    double sum;
  };

  static bool better(double gain, std::size_t feature, double threshold, const Split& best) {
    if (!best.found || gain > best.gain) return true;
    if (gain < best.gain) return false;
    if (feature != best.feature) return feature < best.feature;
    return threshold < best.threshold;
  }

  std::int32_t grow(std::size_t begin, std::size_t end, std::size_t depth) {
    const auto index = static_cast<std::int32_t>(tree_.nodes.size());
    tree_.nodes.emplace_back();

    const std::size_t m = end - begin;
    double sum = 0.0;
    double sumsq = 0.0;
    for (std::size_t i = begin; i < end; ++i) {
      const double r = residual_[rows_[i]];
      sum += r;
      sumsq += r * r;
    }
    const double mean = sum / static_cast<double>(m);
    tree_.nodes[static_cast<std::size_t>(index)].value = mean;

    auto make_leaf = [&] {
      for (std::size_t i = begin; i < end; ++i) leaf_out_[rows_[i]] = mean;
      return index;
    };

    if (depth >= cfg_.max_depth || m < 2 * cfg_.min_samples_leaf) return make_leaf();
    const double centered = sumsq - sum * sum / static_cast<double>(m);
    if (!(centered > kConstantResidualTol * sumsq)) return make_leaf();

    Split best;
    for (std::size_t f : sample_features()) evaluate_feature(f, begin, end, sum, best);
    if (!best.found || !(best.gain > kMinRelativeGain * centered)) return make_leaf();

    auto first = rows_.begin() + static_cast<std::ptrdiff_t>(begin);
    auto last = rows_.begin() + static_cast<std::ptrdiff_t>(end);
    auto middle = std::stable_partition(first, last, [&](std::uint32_t row) {
      return cols_.value(best.feature, row) <= best.threshold;
    });
    const auto mid = begin + static_cast<std::size_t>(middle - first);

    ++split_counts_[best.feature];
    const auto left = grow(begin, mid, depth + 1);
    const auto right = grow(mid, end, depth + 1);
    auto& node = tree_.nodes[static_cast<std::size_t>(index)];
    node.feature = static_cast<std::int32_t>(best.feature);
    node.threshold = best.threshold;
    node.left = left;
    node.right = right;
    return index;
  }

  // Partial Fisher-Yates over a persistent pool; the draw sequence is a
  // function of the seed alone.
  std::span<const std::size_t> sample_features() {
    if (subsample_ >= feature_pool_.size()) return feature_pool_;
    for (std::size_t i = 0; i < subsample_; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, feature_pool_.size() - 1);
      std::swap(feature_pool_[i], feature_pool_[pick(rng_)]);
    }
    return std::span<const std::size_t>(feature_pool_).first(subsample_);
  }

  void evaluate_feature(std::size_t f, std::size_t begin, std::size_t end, double total,
                        Split& best) {
    const auto& distinct = cols_.distinct[f];
    if (distinct.size() < 2) return;
    const std::size_t m = end - begin;

    // Both paths yield per-value groups in ascending order, summing each
    // group's residuals in row order, so they agree to the last bit.
    groups_.clear();
    if (distinct.size() <= 4 * m) {
      for (std::size_t i = begin; i < end; ++i) {
        const auto row = rows_[i];
        const auto k = cols_.rank_of(f, row);
        ++bucket_count_[k];
        bucket_sum_[k] += residual_[row];
      }
      for (std::uint32_t k = 0; k < distinct.size(); ++k) {
        if (bucket_count_[k] == 0) continue;
        groups_.push_back({k, bucket_count_[k], bucket_sum_[k]});
        bucket_count_[k] = 0;
        bucket_sum_[k] = 0.0;
      }
    } else {
      pairs_.clear();
      for (std::size_t i = begin; i < end; ++i) {
        const auto row = rows_[i];
        pairs_.emplace_back(cols_.rank_of(f, row), residual_[row]);
      }
      std::stable_sort(pairs_.begin(), pairs_.end(),
                       [](const auto& a, const auto& b) { return a.first < b.first; });
      for (const auto& [k, r] : pairs_) {
        if (groups_.empty() || groups_.back().rank != k) groups_.push_back({k, 0, 0.0});
        ++groups_.back().count;
        groups_.back().sum += r;
      }
    }
    if (groups_.size() < 2) return;

    const double parent_term = total * total / static_cast<double>(m);
    std::size_t left_n = 0;
    double left_sum = 0.0;
    for (std::size_t g = 0; g + 1 < groups_.size(); ++g) {
      left_n += groups_[g].count;
      left_sum += groups_[g].sum;
      const std::size_t right_n = m - left_n;
      if (left_n < cfg_.min_samples_leaf) continue;
      if (right_n < cfg_.min_samples_leaf) break;
      const double right_sum = total - left_sum;
      const double gain = left_sum * left_sum / static_cast<double>(left_n) +
                          right_sum * right_sum / static_cast<double>(right_n) - parent_term;
      const double lo = distinct[groups_[g].rank];
      const double hi = distinct[groups_[g + 1].rank];
      double threshold = lo + (hi - lo) / 2.0;
      if (!(threshold < hi)) threshold = lo;
      if (better(gain, f, threshold, best)) best = {true, f, threshold, gain};
    }
  }

  const Columns& cols_;
  const GbmConfig& cfg_;
  std::mt19937_64& rng_;
  std::vector<std::size_t>& split_counts_;
  std::vector<std::uint32_t> rows_;
  std::vector<std::size_t> feature_pool_;
  std::size_t subsample_;
  std::vector<std::size_t> bucket_count_;
  std::vector<double> bucket_sum_;
  std::vector<Group> groups_;
  std::vector<std::pair<std::uint32_t, double>> pairs_;
  std::span<const double> residual_;
  std::span<double> leaf_out_;
  RegressionTree tree_;
};

std::vector<double> normalize_counts(const std::vector<std::size_t>& counts) {
  std::vector<double> out(counts.size(), 0.0);
  const auto total = std::accumulate(counts.begin(), counts.end(), std::size_t{0});
  if (total == 0) return out;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    out[i] = static_cast<double>(counts[i]) / static_cast<double>(total);
  }
  return out;
}

}  // namespace

GbmModel fit(const Matrix& X, std::span<const double> y, const GbmConfig& cfg) {
  cfg.validate();
  const std::size_t n = X.rows();
  const std::size_t d = X.cols();
  if (n < 2) throw DomainError("fit requires at least 2 rows");
  if (d < 1) throw DomainError("fit requires at least 1 feature");
  if (y.size() != n) throw DomainError("fit: X and y have different row counts");
  if (!std::all_of(X.data().begin(), X.data().end(), [](double v) { return std::isfinite(v); }) ||
      !std::all_of(y.begin(), y.end(), [](double v) { return std::isfinite(v); })) {
    throw DomainError("fit: inputs must be finite");
  }

  GbmModel model;
  model.config = cfg;
  model.learning_rate = cfg.learning_rate;
  model.feature_count = d;

  // Shifted mean: exact when every target is equal.
  double shift_sum = 0.0;
  for (double v : y) shift_sum += v - y[0];
  model.base_score = y[0] + shift_sum / static_cast<double>(n);

  const Columns cols = prepare_columns(X);
  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> split_counts(d, 0);
  TreeBuilder builder(cols, cfg, rng, split_counts);

  std::vector<double> current(n, model.base_score);
  std::vector<double> residual(n);
  std::vector<double> leaf_out(n);
  model.trees.reserve(cfg.n_iterations);
  model.training_mse.reserve(cfg.n_iterations);
  for (std::size_t it = 0; it < cfg.n_iterations; ++it) {
    for (std::size_t i = 0; i < n; ++i) residual[i] = y[i] - current[i];
    model.trees.push_back(builder.build(residual, leaf_out));
    double sse = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      current[i] += cfg.learning_rate * leaf_out[i];
      const double e = y[i] - current[i];
      sse += e * e;
    }
    model.training_mse.push_back(sse / static_cast<double>(n));
  }
  model.importance = normalize_counts(split_counts);
  return model;
}

std::vector<double> feature_importance(const GbmModel& model) {
  std::vector<std::size_t> counts(model.feature_count, 0);
  for (const auto& tree : model.trees) {
    for (const auto& node : tree.nodes) {
      if (!node.is_leaf()) ++counts.at(static_cast<std::size_t>(node.feature));
    }
  }
  return normalize_counts(counts);
}

namespace {

json config_to_json(const GbmConfig& cfg) {
  return {{"n_iterations", cfg.n_iterations},
          {"learning_rate", cfg.learning_rate},
          {"max_depth", cfg.max_depth},
          {"feature_subsample", cfg.feature_subsample.to_string()},
          {"min_samples_leaf", cfg.min_samples_leaf},
          {"seed", cfg.seed}};
}

GbmConfig config_from_json(const json& j) {
  GbmConfig cfg;
  cfg.n_iterations = j.at("n_iterations").get<std::size_t>();
  cfg.learning_rate = j.at("learning_rate").get<double>();
  cfg.max_depth = j.at("max_depth").get<std::size_t>();
  cfg.feature_subsample = FeatureSubsample::parse(j.at("feature_subsample").get<std::string>());
  cfg.min_samples_leaf = j.at("min_samples_leaf").get<std::size_t>();
  cfg.seed = j.at("seed").get<std::uint64_t>();
  return cfg;
}

}  // namespace

json model_to_json(const GbmModel& model) {
  json trees = json::array();
  for (const auto& tree : model.trees) {
    json feature = json::array(), threshold = json::array(), left = json::array(),
         right = json::array(), value = json::array();
    for (const auto& n : tree.nodes) {
      feature.push_back(n.feature);
      threshold.push_back(n.threshold);
      left.push_back(n.left);
      right.push_back(n.right);
      value.push_back(n.value);
    }
    trees.push_back({{"feature", std::move(feature)},
                     {"threshold", std::move(threshold)},
                     {"left", std::move(left)},
                     {"right", std::move(right)},
                     {"value", std::move(value)}});
  }
  return {{"format_version", kModelFormatVersion},
          {"config", config_to_json(model.config)},
          {"base_score", model.base_score},
          {"learning_rate", model.learning_rate},
          {"feature_count", model.feature_count},
          {"trees", std::move(trees)},
          {"importance", model.importance},
          {"metadata", model.metadata}};
}

GbmModel model_from_json(const json& doc) {
  if (!doc.is_object() || !doc.contains("format_version")) {
    throw DomainError("model file has no format_version");
  }
  const int version = doc.at("format_version").get<int>();
  if (version != kModelFormatVersion) {
    throw DomainError("model format_version " + std::to_string(version) +
                      " is not supported (expected " + std::to_string(kModelFormatVersion) + ")");
  }
  try {
    GbmModel model;
    model.config = config_from_json(doc.at("config"));
    model.base_score = doc.at("base_score").get<double>();
    model.learning_rate = doc.at("learning_rate").get<double>();
    model.feature_count = doc.at("feature_count").get<std::size_t>();
    model.importance = doc.at("importance").get<std::vector<double>>();
    if (doc.contains("metadata")) model.metadata = doc.at("metadata");
    if (model.importance.size() != model.feature_count) {
      throw DomainError("importance length does not match feature_count");
    }
    for (const auto& t : doc.at("trees")) {
      const auto feature = t.at("feature").get<std::vector<std::int32_t>>();
      const auto threshold = t.at("threshold").get<std::vector<double>>();
      const auto left = t.at("left").get<std::vector<std::int32_t>>();
      const auto right = t.at("right").get<std::vector<std::int32_t>>();
      const auto value = t.at("value").get<std::vector<double>>();
      const std::size_t count = feature.size();
      if (count == 0 || threshold.size() != count || left.size() != count ||
          right.size() != count || value.size() != count) {
        throw DomainError("malformed tree arrays");
      }
      RegressionTree tree;
      tree.nodes.resize(count);
      for (std::size_t i = 0; i < count; ++i) {
        auto& n = tree.nodes[i];
        n = {feature[i], threshold[i], left[i], right[i], value[i]};
        if (!std::isfinite(n.value)) throw DomainError("non-finite leaf value");
        if (n.is_leaf()) continue;
        const auto self = static_cast<std::int32_t>(i);
        const auto size = static_cast<std::int32_t>(count);
        if (static_cast<std::size_t>(n.feature) >= model.feature_count || n.left <= self ||
            n.right <= self || n.left >= size || n.right >= size) {
          throw DomainError("malformed tree node");
        }
      }
      model.trees.push_back(std::move(tree));
    }
    return model;
  } catch (const json::exception& e) {
    throw DomainError(std::string("malformed model file: ") + e.what());
  }
}

void save_model(const GbmModel& model, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write model file: " + path.string());
  out << model_to_json(model).dump() << '\n';
  if (!out) throw IoError("error while writing model file: " + path.string());
}

GbmModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open model file: " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw DomainError("model file is not valid JSON: " + std::string(e.what()));
  }
  return model_from_json(doc);
}

std::string model_fingerprint(const GbmModel& model) {
  const std::string bytes = model_to_json(model).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

GridSearchResult grid_search_iterations(const Matrix& X, std::span<const double> y,
                                        std::span<const std::size_t> grid,
                                        const GbmConfig& cfg_template,
                                        std::span<const std::size_t> fold_of_row) {
  if (grid.empty()) throw DomainError("grid search needs at least one iteration count");
  if (fold_of_row.size() != X.rows() || y.size() != X.rows()) {
    throw DomainError("grid search: fold assignment, X and y must have equal length");
  }
  std::vector<std::size_t> counts(grid.begin(), grid.end());
  std::sort(counts.begin(), counts.end());
  counts.erase(std::unique(counts.begin(), counts.end()), counts.end());
  if (counts.front() == 0) throw DomainError("grid search iteration counts must be >= 1");

  const std::size_t k = *std::max_element(fold_of_row.begin(), fold_of_row.end()) + 1;
  std::vector<double> total_msle(counts.size(), 0.0);
  std::size_t scored_folds = 0;

  // Boosting is sequential, so the model with N trees is a prefix of the
  // model with max(grid) trees; fit once per fold and score each prefix.
  GbmConfig cfg = cfg_template;
  cfg.n_iterations = counts.back();
  for (std::size_t fold = 0; fold < k; ++fold) {
    std::vector<std::size_t> train, valid;
    for (std::size_t i = 0; i < fold_of_row.size(); ++i) {
      (fold_of_row[i] == fold ? valid : train).push_back(i);
    }
    if (valid.empty()) continue;
    std::vector<double> y_train;
    for (auto i : train) y_train.push_back(y[i]);
    const GbmModel model = fit(X.select_rows(train), y_train, cfg);

    std::vector<double> staged(valid.size(), 0.0);
    std::vector<double> actual(valid.size());
    for (std::size_t v = 0; v < valid.size(); ++v) actual[v] = std::max(0.0, std::expm1(y[valid[v]]));
    std::vector<double> preds(valid.size());
    std::size_t next = 0;
    for (std::size_t t = 0; t < model.trees.size(); ++t) {
      for (std::size_t v = 0; v < valid.size(); ++v) staged[v] += model.trees[t].predict(X.row(valid[v]));
      while (next < counts.size() && counts[next] == t + 1) {
        for (std::size_t v = 0; v < valid.size(); ++v) {
          preds[v] = std::max(0.0, std::expm1(model.base_score + model.learning_rate * staged[v]));
        }
        total_msle[next] += msle(preds, actual);
        ++next;
      }
    }
    ++scored_folds;
  }
  if (scored_folds == 0) throw DomainError("grid search: no non-empty validation fold");

  GridSearchResult result;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const double mean = total_msle[i] / static_cast<double>(scored_folds);
    result.scores.push_back({counts[i], mean});
    if (mean < best) {
      best = mean;
      result.best_iterations = counts[i];
    }
  }
  return result;
}

}  // namespace checkin
