#pragma once

// Metrics, k-fold cross-validation, correlation analysis, significance
// testing and the 63-variant chunk sweep.

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "checkin/baselines.hpp"
#include "checkin/core.hpp"
#include "checkin/features.hpp"
#include "checkin/gbm.hpp"
#include "checkin/geo.hpp"

namespace checkin {

/// Mean squared logarithmic error: mean of (ln(p+1) - ln(a+1))^2.
/// Throws DomainError on length mismatch, empty input, negative or
/// non-finite values.
double msle(std::span<const double> preds, std::span<const double> actuals);
/// Mean absolute logarithmic error: mean of |ln(p+1) - ln(a+1)|.
double male(std::span<const double> preds, std::span<const double> actuals);

struct FoldPlan {
  std::size_t k = 10;
  std::uint64_t seed = 0;
  std::vector<std::string> ids;      // in the order given to make_folds
  std::vector<std::size_t> fold_of;  // parallel to ids

  [[nodiscard]] std::vector<std::string> members(std::size_t fold) const;
  [[nodiscard]] std::vector<std::size_t> fold_sizes() const;
};

/// Seeded uniform shuffle, then round-robin assignment to k folds.
/// Throws DomainError when k < 2 or there are fewer ids than folds.
FoldPlan make_folds(std::vector<std::string> ids, std::size_t k, std::uint64_t seed);

/// Ids of the profiles that serve as prediction targets (food businesses).
std::vector<std::string> target_ids(const Dataset& dataset);

enum class ModelFamily { gbm, dnn, mean };
std::string to_string(ModelFamily family);
/// "gbm", "dnn" or "mean".
ModelFamily parse_model_family(std::string_view text);

struct CvConfig {
  ModelFamily family = ModelFamily::gbm;
  ChunkMask mask = ChunkMask::all();
  FeatureConfig features{};
  GbmConfig gbm{};
  DnnConfig dnn{};
};

struct FoldScore {
  double male = 0.0;
  double msle = 0.0;
};

struct EvaluationReport {
  std::string model;
  ChunkMask mask = ChunkMask::all();
  std::vector<FoldScore> folds;
  double mean_male = 0.0;
  double mean_msle = 0.0;

  /// {model, mask, folds:[{male,msle}], mean_male, mean_msle}
  [[nodiscard]] nlohmann::json to_json() const;
  [[nodiscard]] std::vector<double> fold_male() const;
  [[nodiscard]] std::vector<double> fold_msle() const;
};

/// One fold's inputs. Features come from an index over every profile outside
/// the validation fold; training rows exclude their own id.
struct PreparedFold {
  Matrix train_features;  // full six-chunk rows
  std::vector<double> train_log_targets;
  std::vector<Count> train_checkins;
  Matrix valid_features;
  std::vector<double> valid_checkins;
  std::vector<double> valid_dnn;   // DNN predictions for the validation rows
  std::vector<double> valid_mean;  // mean-predictor predictions
};

/// Extracts every fold's features once so many masks can reuse them.
std::vector<PreparedFold> prepare_folds(const Dataset& dataset, const FoldPlan& plan,
                                        const FeatureConfig& features, const DnnConfig& dnn);

/// Scores one model family and mask on prepared folds.
EvaluationReport evaluate_prepared(const std::vector<PreparedFold>& folds, std::size_t vocab_size,
                                   const CvConfig& cfg);

/// k-fold cross-validation: per fold, rebuild the spatial index without the
/// validation profiles, extract masked features, fit, predict and score on
/// the check-in scale.
EvaluationReport cross_validate(const Dataset& dataset, const CvConfig& cfg, const FoldPlan& plan);

/// Rows for every target (food) profile, featurized against an index over
/// the whole dataset with each row's own id excluded.
struct TrainingSet {
  Matrix X;
  std::vector<double> y;  // ln(1 + check-ins)
  std::vector<std::string> ids;
};
TrainingSet build_training_set(const Dataset& dataset, const FeatureConfig& features,
                               ChunkMask mask);

/// Fits on the whole dataset for serving; records the mask and vocabulary
/// size in the model metadata.
GbmModel train_full_model(const Dataset& dataset, const FeatureConfig& features, ChunkMask mask,
                          const GbmConfig& cfg);

/// Pearson correlation. Throws DomainError on length mismatch, fewer than two
/// points or zero variance in either argument.
double pcc(std::span<const double> x, std::span<const double> y);

enum class NeighborSignal { checkins, likes };
/// Values are correlated as ln(1 + x) or as raw counts.
enum class PccScale { log1p, raw };

struct PccPoint {
  double radius_m = 0.0;
  double pcc = 0.0;
  std::size_t targets = 0;
};

inline constexpr std::array<double, 10> kPccRadii = {50,  100, 150, 200, 250,
                                                     300, 350, 400, 450, 500};

/// For each radius, the correlation between each food profile's check-ins
/// and the total signal of its neighbors within that radius (itself
/// excluded). Neighbors are every profile in `index`.
std::vector<PccPoint> pcc_by_radius(const Dataset& dataset, const SpatialIndex& index,
                                    std::span<const double> radii, NeighborSignal signal,
                                    PccScale scale = PccScale::log1p);

struct TTestResult {
  double t = 0.0;
  double p = 1.0;
  double df = 0.0;
};

/// Welch's unequal-variance two-sample t-test, two-sided.
/// Throws DomainError when either sample has fewer than two values.
TTestResult ttest_ind(std::span<const double> a, std::span<const double> b);

struct SweepRow {
  ChunkMask mask;
  double mean_male = 0.0;
  double mean_msle = 0.0;
  std::vector<FoldScore> folds;
};

struct SweepResult {
  std::vector<SweepRow> rows;  // 63 rows in mask order 000001..111111
  std::vector<std::size_t> top_by_male;  // row indices, best first (10)
  std::vector<std::size_t> top_by_msle;
  std::array<int, kChunkCount> counts_by_male{};  // chunk presence in the top 10
  std::array<int, kChunkCount> counts_by_msle{};
};

/// Cross-validates every non-empty chunk mask on the same folds.
SweepResult variant_sweep(const Dataset& dataset, const CvConfig& cfg, const FoldPlan& plan,
                          std::size_t top_n = 10);

/// Ranks rows ascending by a score (ties by mask string) and counts chunk
/// presence over the first top_n.
std::vector<std::size_t> rank_rows(const std::vector<SweepRow>& rows, bool by_msle);

/// mask,male,msle
void write_sweep_csv(std::ostream& out, const SweepResult& sweep);
/// Top-n tables per metric plus a count row per metric.
void write_sweep_counts_csv(std::ostream& out, const SweepResult& sweep, std::string_view model);
/// radius_m,pcc,targets
void write_pcc_csv(std::ostream& out, const std::vector<PccPoint>& curve);

}  // namespace checkin
