#include "checkin/eval.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <boost/math/distributions/students_t.hpp>

namespace checkin {

using nlohmann::json;

namespace {

void check_metric_inputs(std::span<const double> preds, std::span<const double> actuals) {
  if (preds.size() != actuals.size()) throw DomainError("predictions and actuals differ in length");
  if (preds.empty()) throw DomainError("metrics need at least one value");
  auto ok = [](double v) { return std::isfinite(v) && v >= 0.0; };
  if (!std::all_of(preds.begin(), preds.end(), ok) ||
      !std::all_of(actuals.begin(), actuals.end(), ok)) {
    throw DomainError("metrics need finite non-negative values");
  }
}

}  // namespace

double msle(std::span<const double> preds, std::span<const double> actuals) {
  check_metric_inputs(preds, actuals);
  double sum = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const double e = std::log1p(preds[i]) - std::log1p(actuals[i]);
    sum += e * e;
  }
  return sum / static_cast<double>(preds.size());
}

double male(std::span<const double> preds, std::span<const double> actuals) {
  check_metric_inputs(preds, actuals);
  double sum = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    sum += std::abs(std::log1p(preds[i]) - std::log1p(actuals[i]));
  }
  return sum / static_cast<double>(preds.size());
}

std::vector<std::string> FoldPlan::members(std::size_t fold) const {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (fold_of[i] == fold) out.push_back(ids[i]);
  }
  return out;
}

std::vector<std::size_t> FoldPlan::fold_sizes() const {
  std::vector<std::size_t> sizes(k, 0);
  for (auto f : fold_of) ++sizes.at(f);
  return sizes;
}

FoldPlan make_folds(std::vector<std::string> ids, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw DomainError("cross-validation needs k >= 2");
  if (ids.size() < k) {
    throw DomainError("cannot split " + std::to_string(ids.size()) + " ids into " +
                      std::to_string(k) + " folds");
  }
  std::vector<std::size_t> order(ids.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  // Explicit Fisher-Yates keeps plans identical across standard libraries.
  for (std::size_t i = order.size() - 1; i > 0; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % (i + 1));
    std::swap(order[i], order[j]);
  }
  FoldPlan plan;
  plan.k = k;
  plan.seed = seed;
  plan.fold_of.assign(ids.size(), 0);
  for (std::size_t pos = 0; pos < order.size(); ++pos) plan.fold_of[order[pos]] = pos % k;
  plan.ids = std::move(ids);
  return plan;
}

std::vector<std::string> target_ids(const Dataset& dataset) {
  std::vector<std::string> ids;
  for (const auto& p : dataset.profiles) {
    if (p.is_food) ids.push_back(p.id);
  }
  return ids;
}

std::string to_string(ModelFamily family) {
  switch (family) {
    case ModelFamily::gbm: return "gbm";
    case ModelFamily::dnn: return "dnn";
    case ModelFamily::mean: return "mean";
  }
  return "gbm";
}

ModelFamily parse_model_family(std::string_view text) {
  if (text == "gbm") return ModelFamily::gbm;
  if (text == "dnn") return ModelFamily::dnn;
  if (text == "mean") return ModelFamily::mean;
  throw DomainError("model family must be gbm, dnn or mean");
}

json EvaluationReport::to_json() const {
  json folds_json = json::array();
  for (const auto& f : folds) folds_json.push_back({{"male", f.male}, {"msle", f.msle}});
  return {{"model", model},
          {"mask", mask.to_string()},
          {"folds", std::move(folds_json)},
          {"mean_male", mean_male},
          {"mean_msle", mean_msle}};
}

std::vector<double> EvaluationReport::fold_male() const {
  std::vector<double> out;
  for (const auto& f : folds) out.push_back(f.male);
  return out;
}

std::vector<double> EvaluationReport::fold_msle() const {
  std::vector<double> out;
  for (const auto& f : folds) out.push_back(f.msle);
  return out;
}

std::vector<PreparedFold> prepare_folds(const Dataset& dataset, const FoldPlan& plan,
                                        const FeatureConfig& features, const DnnConfig& dnn) {
  features.validate();
  dnn.validate();
  std::unordered_map<std::string_view, std::size_t> fold_of_id;
  for (std::size_t i = 0; i < plan.ids.size(); ++i) fold_of_id.emplace(plan.ids[i], plan.fold_of[i]);
  if (fold_of_id.size() != plan.ids.size()) throw DomainError("fold plan repeats an id");
  std::size_t matched = 0;
  for (const auto& p : dataset.profiles) matched += fold_of_id.count(p.id);
  if (matched != plan.ids.size()) throw DomainError("fold plan names ids missing from the dataset");

  const double max_radius = std::max(features.max_radius(), dnn.radius_m);
  std::vector<PreparedFold> folds(plan.k);
  for (std::size_t fold = 0; fold < plan.k; ++fold) {
    std::vector<PlaceProfile> context;
    std::vector<const PlaceProfile*> train, valid;
    for (const auto& p : dataset.profiles) {
      auto it = fold_of_id.find(p.id);
      if (it != fold_of_id.end() && it->second == fold) {
        valid.push_back(&p);
        continue;
      }
      context.push_back(p);
      if (it != fold_of_id.end()) train.push_back(&p);
    }
    if (train.size() < 2) throw DomainError("a training fold has fewer than two targets");

    const SpatialIndex index(context, max_radius);
    auto& out = folds[fold];
    std::size_t dim = 2 * dataset.vocabulary.size() + 4 * kHotspotCount;
    out.train_features = Matrix(train.size(), dim);
    for (std::size_t r = 0; r < train.size(); ++r) {
      const auto& p = *train[r];
      auto fv = extract_features(p.location, p.categories, index, dataset.vocabulary, features, p.id)
                    .flatten();
      std::copy(fv.begin(), fv.end(), out.train_features.row(r).begin());
      out.train_log_targets.push_back(log1p_score(static_cast<double>(p.checkins)));
      out.train_checkins.push_back(p.checkins);
    }

    DnnConfig fold_dnn = dnn;
    fold_dnn.fallback_checkins = median_checkins(out.train_checkins);
    const double mean_prediction = MeanPredictor(out.train_checkins).predict();

    out.valid_features = Matrix(valid.size(), dim);
    for (std::size_t r = 0; r < valid.size(); ++r) {
      const auto& p = *valid[r];
      auto fv = extract_features(p.location, p.categories, index, dataset.vocabulary, features, p.id)
                    .flatten();
      std::copy(fv.begin(), fv.end(), out.valid_features.row(r).begin());
      out.valid_checkins.push_back(static_cast<double>(p.checkins));
      out.valid_dnn.push_back(dnn_predict(index, p.location, fold_dnn, p.id));
      out.valid_mean.push_back(mean_prediction);
    }
  }
  return folds;
}

namespace {

std::vector<std::size_t> mask_columns(std::size_t vocab_size, ChunkMask mask) {
  std::vector<std::size_t> cols;
  std::size_t offset = 0;
  for (std::size_t c = 0; c < kChunkCount; ++c) {
    const std::size_t width = c < 2 ? vocab_size : kHotspotCount;
    if (mask.test(c)) {
      for (std::size_t j = 0; j < width; ++j) cols.push_back(offset + j);
    }
    offset += width;
  }
  return cols;
}

void finish_report(EvaluationReport& report) {
  double male_sum = 0.0;
  double msle_sum = 0.0;
  for (const auto& f : report.folds) {
    male_sum += f.male;
    msle_sum += f.msle;
  }
  const auto n = static_cast<double>(report.folds.size());
  report.mean_male = male_sum / n;
  report.mean_msle = msle_sum / n;
}

}  // namespace

EvaluationReport evaluate_prepared(const std::vector<PreparedFold>& folds, std::size_t vocab_size,
                                   const CvConfig& cfg) {
  if (!cfg.mask.any()) throw DomainError("chunk mask selects no chunks");
  EvaluationReport report;
  report.model = to_string(cfg.family);
  report.mask = cfg.mask;
  const auto cols = mask_columns(vocab_size, cfg.mask);
  for (const auto& fold : folds) {
    if (fold.valid_checkins.empty()) continue;
    std::vector<double> preds;
    switch (cfg.family) {
      case ModelFamily::gbm: {
        const Matrix train = fold.train_features.select_cols(cols);
        const Matrix valid = fold.valid_features.select_cols(cols);
        const GbmModel model = fit(train, fold.train_log_targets, cfg.gbm);
        preds.reserve(valid.rows());
        for (std::size_t r = 0; r < valid.rows(); ++r) {
          preds.push_back(std::max(0.0, std::expm1(model.predict(valid.row(r)))));
        }
        break;
      }
      case ModelFamily::dnn: preds = fold.valid_dnn; break;
      case ModelFamily::mean: preds = fold.valid_mean; break;
    }
    report.folds.push_back({male(preds, fold.valid_checkins), msle(preds, fold.valid_checkins)});
  }
  if (report.folds.empty()) throw DomainError("no fold has validation profiles");
  finish_report(report);
  return report;
}

EvaluationReport cross_validate(const Dataset& dataset, const CvConfig& cfg, const FoldPlan& plan) {
  const auto folds = prepare_folds(dataset, plan, cfg.features, cfg.dnn);
  return evaluate_prepared(folds, dataset.vocabulary.size(), cfg);
}

TrainingSet build_training_set(const Dataset& dataset, const FeatureConfig& features,
                               ChunkMask mask) {
  features.validate();
  if (!mask.any()) throw DomainError("chunk mask selects no chunks");
  const SpatialIndex index(dataset.profiles, features.max_radius());
  TrainingSet set;
  std::vector<double> data;
  for (const auto& p : dataset.profiles) {
    if (!p.is_food) continue;
    const auto fv =
        extract_features(p.location, p.categories, index, dataset.vocabulary, features, p.id);
    const auto row = apply_mask(fv, mask);
    data.insert(data.end(), row.begin(), row.end());
    set.y.push_back(log1p_score(static_cast<double>(p.checkins)));
    set.ids.push_back(p.id);
  }
  set.X = Matrix(set.ids.size(), masked_dimension(dataset.vocabulary.size(), mask), std::move(data));
  return set;
}

GbmModel train_full_model(const Dataset& dataset, const FeatureConfig& features, ChunkMask mask,
                          const GbmConfig& cfg) {
  const auto set = build_training_set(dataset, features, mask);
  GbmModel model = fit(set.X, set.y, cfg);
  model.metadata = {{"mask", mask.to_string()},
                    {"vocabulary_size", dataset.vocabulary.size()},
                    {"training_rows", set.ids.size()}};
  return model;
}

double pcc(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DomainError("pcc arguments differ in length");
  if (x.size() < 2) throw DomainError("pcc needs at least two points");
  const auto n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (!(sxx > 0.0) || !(syy > 0.0)) throw DomainError("pcc undefined: zero variance");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::vector<PccPoint> pcc_by_radius(const Dataset& dataset, const SpatialIndex& index,
                                    std::span<const double> radii, NeighborSignal signal,
                                    PccScale scale) {
  if (radii.empty()) throw DomainError("pcc_by_radius needs at least one radius");
  if (!std::is_sorted(radii.begin(), radii.end())) throw DomainError("radii must be ascending");
  auto transform = [scale](double v) { return scale == PccScale::log1p ? std::log1p(v) : v; };

  std::vector<double> target;
  std::vector<std::vector<double>> totals(radii.size());
  for (const auto& p : dataset.profiles) {
    if (!p.is_food) continue;
    target.push_back(transform(static_cast<double>(p.checkins)));
    const auto hits = index.radius_query(p.location, radii.back(), p.id);
    double total = 0.0;
    std::size_t h = 0;
    for (std::size_t r = 0; r < radii.size(); ++r) {
      for (; h < hits.size() && hits[h].distance_m <= radii[r]; ++h) {
        const auto& q = *hits[h].profile;
        total += static_cast<double>(signal == NeighborSignal::checkins ? q.checkins : q.likes);
      }
      totals[r].push_back(transform(total));
    }
  }
  std::vector<PccPoint> curve;
  for (std::size_t r = 0; r < radii.size(); ++r) {
    curve.push_back({radii[r], pcc(target, totals[r]), target.size()});
  }
  return curve;
}

TTestResult ttest_ind(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) throw DomainError("t-test needs at least two values per sample");
  auto moments = [](std::span<const double> s) {
    const auto n = static_cast<double>(s.size());
    const double mean = std::accumulate(s.begin(), s.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : s) ss += (v - mean) * (v - mean);
    return std::pair{mean, ss / (n - 1.0)};
  };
  const auto [mean_a, var_a] = moments(a);
  const auto [mean_b, var_b] = moments(b);
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double qa = var_a / na;
  const double qb = var_b / nb;
  const double se2 = qa + qb;
  const double diff = mean_a - mean_b;

  TTestResult result;
  if (!(se2 > 0.0)) {
    if (diff == 0.0) return {0.0, 1.0, 0.0};
    const double inf = std::numeric_limits<double>::infinity();
    return {diff > 0.0 ? inf : -inf, 0.0, 0.0};
  }
  result.t = diff / std::sqrt(se2);
  result.df = se2 * se2 / (qa * qa / (na - 1.0) + qb * qb / (nb - 1.0));
  const boost::math::students_t dist(result.df);
  result.p = std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(result.t))));
  return result;
}

std::vector<std::size_t> rank_rows(const std::vector<SweepRow>& rows, bool by_msle) {
  std::vector<std::size_t> order(rows.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const double sa = by_msle ? rows[a].mean_msle : rows[a].mean_male;
    const double sb = by_msle ? rows[b].mean_msle : rows[b].mean_male;
    if (sa != sb) return sa < sb;
    return rows[a].mask.to_string() < rows[b].mask.to_string();
  });
  return order;
}

SweepResult variant_sweep(const Dataset& dataset, const CvConfig& cfg, const FoldPlan& plan,
                          std::size_t top_n) {
  const auto folds = prepare_folds(dataset, plan, cfg.features, cfg.dnn);
  SweepResult sweep;
  for (const auto& mask : ChunkMask::enumerate_nonempty()) {
    CvConfig variant = cfg;
    variant.mask = mask;
    const auto report = evaluate_prepared(folds, dataset.vocabulary.size(), variant);
    sweep.rows.push_back({mask, report.mean_male, report.mean_msle, report.folds});
  }
  auto top = [&](bool by_msle, std::array<int, kChunkCount>& counts) {
    auto order = rank_rows(sweep.rows, by_msle);
    order.resize(std::min(top_n, order.size()));
    for (auto i : order) {
      for (std::size_t c = 0; c < kChunkCount; ++c) counts[c] += sweep.rows[i].mask.test(c) ? 1 : 0;
    }
    return order;
  };
  sweep.top_by_male = top(false, sweep.counts_by_male);
  sweep.top_by_msle = top(true, sweep.counts_by_msle);
  return sweep;
}

void write_sweep_csv(std::ostream& out, const SweepResult& sweep) {
  std::ostringstream body;
  body << std::setprecision(10);
  body << "mask,male,msle\n";
  for (const auto& row : sweep.rows) {
    body << row.mask.to_string() << ',' << row.mean_male << ',' << row.mean_msle << '\n';
  }
  out << body.str();
}

void write_sweep_counts_csv(std::ostream& out, const SweepResult& sweep, std::string_view model) {
  std::ostringstream body;
  body << std::setprecision(10);
  body << "metric,rank,model,C1,C2,C3,C4,C5,C6,score\n";
  auto table = [&](const char* metric, const std::vector<std::size_t>& order,
                   const std::array<int, kChunkCount>& counts, bool by_msle) {
    for (std::size_t i = 0; i < order.size(); ++i) {
      const auto& row = sweep.rows[order[i]];
      body << metric << ',' << i + 1 << ',' << model << '_' << row.mask.to_string();
      for (std::size_t c = 0; c < kChunkCount; ++c) body << ',' << (row.mask.test(c) ? "Yes" : "--");
      body << ',' << (by_msle ? row.mean_msle : row.mean_male) << '\n';
    }
    body << metric << ",count,";
    for (int c : counts) body << ',' << c;
    body << ",\n";
  };
  table("male", sweep.top_by_male, sweep.counts_by_male, false);
  table("msle", sweep.top_by_msle, sweep.counts_by_msle, true);
  out << body.str();
}

void write_pcc_csv(std::ostream& out, const std::vector<PccPoint>& curve) {
  std::ostringstream body;
  body << std::setprecision(10);
  body << "radius_m,pcc,targets\n";
  for (const auto& point : curve) {
    body << point.radius_m << ',' << point.pcc << ',' << point.targets << '\n';
  }
  out << body.str();
}

}  // namespace checkin
