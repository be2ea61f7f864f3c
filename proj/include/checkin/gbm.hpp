#pragma once

// Gradient-boosted regression trees with least-squares loss.
//
// Each iteration fits a depth-limited tree to the current residuals. Splits
// are chosen exactly: every midpoint between consecutive distinct values of
// a feature within a node is scored by SSE reduction, over a per-node random
// subset of features. Ties prefer the smaller feature index, then the smaller
// threshold, so a fit is a pure function of (X, y, config).

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "checkin/core.hpp"

namespace checkin {

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  [[nodiscard]] std::size_t rows() const noexcept { return rows_; }
  [[nodiscard]] std::size_t cols() const noexcept { return cols_; }
  [[nodiscard]] double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  [[nodiscard]] double operator()(std::size_t r, std::size_t c) const {
    return data_[r * cols_ + c];
  }
  [[nodiscard]] std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }
  [[nodiscard]] std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  [[nodiscard]] const std::vector<double>& data() const noexcept { return data_; }

  /// Copy of the listed rows, in order.
  [[nodiscard]] Matrix select_rows(std::span<const std::size_t> indices) const;
  /// Copy of the listed columns, in order.
  [[nodiscard]] Matrix select_cols(std::span<const std::size_t> indices) const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// How many features each node may consider.
struct FeatureSubsample {
  enum class Rule { sqrt, all, fixed };
  Rule rule = Rule::sqrt;
  std::size_t count = 0;  // used by Rule::fixed

  /// floor(sqrt(d)) for sqrt, d for all, min(count, d) for fixed; at least 1.
  [[nodiscard]] std::size_t resolve(std::size_t feature_count) const;
  /// "sqrt", "all" or a positive integer.
  static FeatureSubsample parse(std::string_view text);
  [[nodiscard]] std::string to_string() const;

  friend bool operator==(const FeatureSubsample&, const FeatureSubsample&) = default;
};

struct GbmConfig {
  std::size_t n_iterations = 1000;
  double learning_rate = 0.1;
  std::size_t max_depth = 10;
  FeatureSubsample feature_subsample{};
  std::size_t min_samples_leaf = 1;
  std::uint64_t seed = 0;

  void validate() const;
  friend bool operator==(const GbmConfig&, const GbmConfig&) = default;
};

/// Internal nodes send x[feature] <= threshold to `left`.
struct TreeNode {
  std::int32_t feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  std::int32_t left = -1;
  std::int32_t right = -1;
  double value = 0.0;  // leaf output (mean residual), unscaled

  [[nodiscard]] bool is_leaf() const noexcept { return feature < 0; }
};

struct RegressionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  [[nodiscard]] double predict(std::span<const double> x) const;
  /// Number of edges on the longest root-to-leaf path.
  [[nodiscard]] std::size_t depth() const;
  [[nodiscard]] std::size_t split_count() const;
};

struct GbmModel {
  double base_score = 0.0;
  std::vector<RegressionTree> trees;
  double learning_rate = 0.1;
  /// Split-count share per feature; sums to 1, or all zero without splits.
  std::vector<double> importance;
  GbmConfig config;
  std::size_t feature_count = 0;
  /// Training MSE after each iteration. Not serialized.
  std::vector<double> training_mse;
  /// Free-form provenance (e.g. the chunk mask); serialized verbatim.
  nlohmann::json metadata = nlohmann::json::object();

  /// base_score + learning_rate * sum of tree outputs.
  [[nodiscard]] double predict(std::span<const double> x) const;
  /// Prediction using only the first n_trees trees.
  [[nodiscard]] double predict_staged(std::span<const double> x, std::size_t n_trees) const;
};

/// Fits on rows of X against targets y. Throws DomainError when n < 2,
/// d < 1, lengths differ or any value is non-finite.
GbmModel fit(const Matrix& X, std::span<const double> y, const GbmConfig& cfg);

/// Throws DomainError on a dimension mismatch.
double predict(const GbmModel& model, std::span<const double> x);

/// Split counts per feature across all trees, normalized to sum 1.
std::vector<double> feature_importance(const GbmModel& model);

inline constexpr int kModelFormatVersion = 1;

nlohmann::json model_to_json(const GbmModel& model);
/// Throws DomainError on a format_version mismatch or malformed trees.
GbmModel model_from_json(const nlohmann::json& doc);
void save_model(const GbmModel& model, const std::filesystem::path& path);
GbmModel load_model(const std::filesystem::path& path);
/// Hex FNV-1a hash of the serialized model.
std::string model_fingerprint(const GbmModel& model);

struct GridSearchResult {
  std::size_t best_iterations = 0;
  struct Score {
    std::size_t iterations;
    double mean_msle;
  };
  std::vector<Score> scores;  // ascending by iteration count
};

/// Cross-validated choice of n_iterations. Targets are ln(1 + check-ins);
/// scores are MSLE on the check-in scale. fold_of_row assigns each row to a
/// fold in [0, k). Ties go to the smaller count.
GridSearchResult grid_search_iterations(const Matrix& X, std::span<const double> y,
                                        std::span<const std::size_t> grid,
                                        const GbmConfig& cfg_template,
                                        std::span<const std::size_t> fold_of_row);

}  // namespace checkin
