#include "checkin/cli.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "checkin/baselines.hpp"
#include "checkin/core.hpp"
#include "checkin/eval.hpp"
#include "checkin/features.hpp"
#include "checkin/gbm.hpp"
#include "checkin/geo.hpp"
#include "checkin/ingest.hpp"
#include "checkin/service.hpp"

namespace checkin {

namespace {

namespace fs = std::filesystem;

// Used when no --food-list is given. Labels follow Facebook's page category
// names for places that sell food or drink.
const std::vector<std::string> kDefaultFoodLabels = {
    "american restaurant", "asian fusion restaurant", "asian restaurant", "bagel shop",
    "bakery", "bar", "bar & grill", "barbecue restaurant", "beer bar", "beer garden",
    "breakfast & brunch restaurant", "brewery", "bubble tea shop", "buffet restaurant",
    "burger restaurant", "cafe", "cafeteria", "cajun & creole restaurant", "cantonese restaurant",
    "caterer", "chicken joint", "chinese restaurant", "chocolate shop", "cocktail bar",
    "coffee shop", "convenience store", "creperie", "cupcake shop", "deli", "dessert shop",
    "diner", "dim sum restaurant", "donut shop", "dumpling restaurant", "european restaurant",
    "family style restaurant", "fast food restaurant", "filipino restaurant", "fish & chips shop",
    "food & beverage", "food & restaurant", "food stand", "food truck", "french restaurant",
    "frozen yogurt shop", "fusion restaurant", "gastropub", "german restaurant",
    "gluten-free restaurant", "greek restaurant", "grocery store", "halal restaurant",
    "hawker centre", "health food restaurant", "hot dog joint", "hot pot restaurant",
    "ice cream shop", "indian restaurant", "indonesian restaurant", "irish pub",
    "italian restaurant", "japanese restaurant", "juice bar", "korean restaurant",
    "lebanese restaurant", "malaysian restaurant", "mediterranean restaurant",
    "mexican restaurant", "middle eastern restaurant", "modern european restaurant",
    "noodle house", "pizza place", "pub", "ramen restaurant", "restaurant", "salad bar",
    "sandwich shop", "seafood restaurant", "singaporean restaurant", "smoothie & juice bar",
    "soup restaurant", "spanish restaurant", "steakhouse", "sushi restaurant", "tapas bar & restaurant",
    "tea room", "teppanyaki restaurant", "thai restaurant", "vegan restaurant",
    "vegetarian restaurant", "vietnamese restaurant", "wine bar", "wings joint"};

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

FoodCategoryList food_list_from(const std::string& path) {
  if (path.empty()) return FoodCategoryList(std::span<const std::string>(kDefaultFoodLabels));
  if (!fs::exists(path)) throw UsageError("food list not found: " + path);
  return load_food_list(path);
}

BoundingBox parse_bbox(const std::string& text) {
  if (text == "singapore") return BoundingBox::singapore();
  if (text == "world") return BoundingBox::world();
  std::array<double, 4> v{};
  std::stringstream ss(text);
  std::string part;
  std::size_t n = 0;
  while (std::getline(ss, part, ',')) {
    if (n == 4) throw DomainError("--bbox takes min_lat,max_lat,min_lng,max_lng");
    try {
      v[n++] = std::stod(part);
    } catch (const std::exception&) {
      throw DomainError("--bbox value '" + part + "' is not a number");
    }
  }
  if (n != 4) throw DomainError("--bbox takes min_lat,max_lat,min_lng,max_lng");
  BoundingBox box{v[0], v[1], v[2], v[3]};
  box.validate();
  return box;
}

Dataset read_dataset(const std::string& path) {
  if (!fs::exists(path)) throw UsageError("input not found: " + path);
  return load_dataset(path);
}

template <typename Fn>
void write_file(const std::string& path, Fn&& fn) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  fn(out);
  if (!out) throw IoError("write failed: " + path);
}

// Every option with its effective value, so a run can be repeated verbatim.
std::string invocation_line(const std::string& program, const CLI::App& sub) {
  std::ostringstream line;
  line << program << ' ' << sub.get_name();
  for (const CLI::Option* opt : sub.get_options()) {
    if (opt->get_lnames().empty() || opt->get_lnames().front() == "help") continue;
    const std::string name = "--" + opt->get_lnames().front();
    if (opt->get_type_size() == 0) {
      if (opt->count() > 0) line << ' ' << name;
      continue;
    }
    std::string value;
    if (opt->count() > 0) {
      const auto& results = opt->results();
      for (std::size_t i = 0; i < results.size(); ++i) value += (i ? "," : "") + results[i];
    } else {
      value = opt->get_default_str();
    }
    if (value.empty()) continue;
    line << ' ' << name << ' ' << std::quoted(value);
  }
  return line.str();
}

struct GbmFlags {
  std::size_t iterations = GbmConfig{}.n_iterations;
  double learning_rate = GbmConfig{}.learning_rate;
  std::size_t max_depth = GbmConfig{}.max_depth;
  std::string subsample = "sqrt";
  std::size_t min_leaf = 1;

  void add(CLI::App& app) {
    app.add_option("--iterations", iterations, "Boosting iterations");
    app.add_option("--learning-rate", learning_rate, "Shrinkage per tree");
    app.add_option("--max-depth", max_depth, "Maximum tree depth");
    app.add_option("--max-features", subsample, "Features per split: sqrt, all or a count");
    app.add_option("--min-leaf", min_leaf, "Minimum samples per leaf");
  }

  [[nodiscard]] GbmConfig config(std::uint64_t seed) const {
    GbmConfig cfg;
    cfg.n_iterations = iterations;
    cfg.learning_rate = learning_rate;
    cfg.max_depth = max_depth;
    cfg.feature_subsample = FeatureSubsample::parse(subsample);
    cfg.min_samples_leaf = min_leaf;
    cfg.seed = seed;
    cfg.validate();
    return cfg;
  }
};

void print_report_table(std::ostream& out, const EvaluationReport& report) {
  out << "fold      MALE      MSLE\n";
  for (std::size_t i = 0; i < report.folds.size(); ++i) {
    out << std::setw(4) << i << std::fixed << std::setprecision(5) << std::setw(10)
        << report.folds[i].male << std::setw(10) << report.folds[i].msle << '\n';
  }
  out << "mean" << std::setw(10) << report.mean_male << std::setw(10) << report.mean_msle << '\n';
  out.unsetf(std::ios::floatfield);
}

std::atomic<bool> g_interrupted{false};

extern "C" void on_interrupt(int) { g_interrupted.store(true); }

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Check-in prediction engine", "checkin"};
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();

  // ingest
  std::string in_path, out_path, food_path, bbox = "singapore", rejects_path, summary_path;
  bool food_only = false;
  auto* ingest = app.add_subcommand("ingest", "Parse raw page records into a dataset bundle");
  ingest->add_option("--in", in_path, "Line-delimited JSON profiles")->required();
  ingest->add_option("--out", out_path, "Dataset bundle to write")->required();
  ingest->add_option("--food-list", food_path, "Food category list (built-in list if empty)");
  ingest->add_option("--bbox", bbox, "singapore, world or min_lat,max_lat,min_lng,max_lng");
  ingest->add_flag("--food-only", food_only, "Keep only profiles with a food category");
  ingest->add_option("--rejects", rejects_path, "Write rejected lines here");
  ingest->add_option("--summary", summary_path, "Write the per-category summary CSV here");

  // synth
  SynthConfig synth_cfg;
  std::uint64_t seed = 1;
  std::string raw_path;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic city");
  synth->add_option("--out", out_path, "Dataset bundle to write")->required();
  synth->add_option("--raw", raw_path, "Also write line-delimited profiles");
  synth->add_option("--seed", seed, "Random seed");
  synth->add_option("--n", synth_cfg.n_profiles, "Number of profiles");
  synth->add_option("--centers", synth_cfg.n_hotspot_centers, "Number of latent attractors");
  synth->add_option("--decay", synth_cfg.decay_scale_m, "Attractor decay scale in meters");
  synth->add_option("--noise", synth_cfg.noise_sigma, "Log-normal noise sigma");
  synth->add_option("--categories", synth_cfg.category_pool_size, "Category pool size");

  // features
  std::string mask_text = "111111";
  double c2_radius = FeatureConfig{}.category_neighbor_radius_m;
  auto* features = app.add_subcommand("features", "Write the feature matrix of all food profiles");
  features->add_option("--in", in_path, "Dataset bundle")->required();
  features->add_option("--out", out_path, "CSV to write")->required();
  features->add_option("--category-radius", c2_radius, "Neighbor category radius in meters");

  // train
  GbmFlags gbm_flags;
  std::string grid_text;
  std::size_t k = 10;
  auto* train = app.add_subcommand("train", "Fit the serving model on the whole dataset");
  train->add_option("--in", in_path, "Dataset bundle")->required();
  train->add_option("--out", out_path, "Model JSON to write")->required();
  train->add_option("--mask", mask_text, "Chunk mask, e.g. 110100");
  train->add_option("--seed", seed, "Random seed");
  train->add_option("--grid", grid_text, "Comma-separated iteration counts to cross-validate");
  train->add_option("--k", k, "Folds for --grid");
  train->add_option("--category-radius", c2_radius, "Neighbor category radius in meters");
  gbm_flags.add(*train);

  // eval
  std::string family_text = "gbm";
  double dnn_radius = DnnConfig{}.radius_m;
  auto* eval = app.add_subcommand("eval", "k-fold cross-validation of one model");
  eval->add_option("--in", in_path, "Dataset bundle")->required();
  eval->add_option("--out", out_path, "Report JSON to write (stdout if empty)");
  eval->add_option("--family", family_text, "gbm, dnn or mean");
  eval->add_option("--mask", mask_text, "Chunk mask, e.g. 110100");
  eval->add_option("--k", k, "Number of folds");
  eval->add_option("--seed", seed, "Fold and model seed");
  eval->add_option("--radius", dnn_radius, "DNN radius in meters");
  eval->add_option("--category-radius", c2_radius, "Neighbor category radius in meters");
  gbm_flags.add(*eval);

  // sweep
  std::string counts_path;
  auto* sweep = app.add_subcommand("sweep", "Cross-validate all 63 chunk masks");
  sweep->add_option("--in", in_path, "Dataset bundle")->required();
  sweep->add_option("--out", out_path, "Sweep CSV to write")->required();
  sweep->add_option("--counts", counts_path, "Top-10 chunk count CSV to write");
  sweep->add_option("--family", family_text, "Model family (gbm)");
  sweep->add_option("--k", k, "Number of folds");
  sweep->add_option("--seed", seed, "Fold and model seed");
  sweep->add_option("--category-radius", c2_radius, "Neighbor category radius in meters");
  gbm_flags.add(*sweep);

  // pcc
  std::string signal_text = "checkins", scale_text = "log1p";
  auto* pcc_cmd = app.add_subcommand("pcc", "Correlation of check-ins with neighbor signal by radius");
  pcc_cmd->add_option("--in", in_path, "Dataset bundle")->required();
  pcc_cmd->add_option("--out", out_path, "Curve CSV to write (stdout if empty)");
  pcc_cmd->add_option("--signal", signal_text, "checkins or likes");
  pcc_cmd->add_option("--scale", scale_text, "log1p or raw");

  // serve
  std::string model_path, host = "127.0.0.1";
  int port = 8080;
  double ranking_radius = ServiceConfig{}.default_ranking_radius_m;
  auto* serve = app.add_subcommand("serve", "Run the HTTP prediction service");
  serve->add_option("--in", in_path, "Dataset bundle")->required();
  serve->add_option("--model", model_path, "Model JSON from train")->required();
  serve->add_option("--host", host, "Bind address");
  serve->add_option("--port", port, "Port (0 picks a free one)");
  serve->add_option("--radius", ranking_radius, "Default ranking radius in meters");

  std::vector<std::string> argv(args.begin() + (args.empty() ? 0 : 1), args.end());
  std::reverse(argv.begin(), argv.end());
  try {
    app.parse(argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  const std::string program = args.empty() ? "checkin" : fs::path(args[0]).filename().string();
  CLI::App* sub = app.get_subcommands().front();
  err << "invocation: " << invocation_line(program, *sub) << '\n';

  try {
    FeatureConfig feature_cfg;
    feature_cfg.category_neighbor_radius_m = c2_radius;
    feature_cfg.validate();

    if (sub == ingest) {
      if (!fs::exists(in_path)) throw UsageError("input not found: " + in_path);
      const auto box = parse_bbox(bbox);
      auto food = food_list_from(food_path);
      auto parsed = parse_profiles_file(in_path);
      auto kept = filter_scope(parsed.profiles, box, food, food_only);
      const auto food_count = static_cast<std::size_t>(
          std::count_if(kept.begin(), kept.end(), [](const PlaceProfile& p) { return p.is_food; }));
      if (kept.empty()) throw DomainError("no profiles left after filtering");
      if (!summary_path.empty()) {
        write_file(summary_path, [&](std::ostream& o) {
          write_category_summary_csv(o, category_summary(kept));
        });
      }
      const auto kept_count = kept.size();
      const auto dataset = make_dataset(std::move(kept), std::move(food));
      save_dataset(dataset, out_path);
      if (!rejects_path.empty()) {
        write_file(rejects_path, [&](std::ostream& o) { write_rejects_jsonl(o, parsed.rejected); });
      }
      out << "kept " << kept_count << " rejected " << parsed.rejected.size() << " food "
          << food_count << " out-of-scope " << parsed.profiles.size() - kept_count << '\n';
      return kExitOk;
    }

    if (sub == synth) {
      synth_cfg.seed = seed;
      const auto dataset = synth_generate(synth_cfg);
      save_dataset(dataset, out_path);
      if (!raw_path.empty()) {
        write_file(raw_path, [&](std::ostream& o) { write_profiles_jsonl(o, dataset.profiles); });
      }
      out << "wrote " << dataset.profiles.size() << " profiles, " << dataset.vocabulary.size()
          << " categories to " << out_path << '\n';
      return kExitOk;
    }

    if (sub == features) {
      const auto dataset = read_dataset(in_path);
      const auto index = build_index(dataset.profiles, feature_cfg.max_radius());
      std::vector<FeatureVector> rows;
      std::vector<Count> targets;
      for (const auto& p : dataset.profiles) {
        if (!p.is_food) continue;
        rows.push_back(extract_features(p.location, p.categories, index, dataset.vocabulary,
                                        feature_cfg, p.id));
        targets.push_back(p.checkins);
      }
      write_file(out_path, [&](std::ostream& o) {
        write_feature_csv(o, dataset.vocabulary, rows, targets);
      });
      out << "wrote " << rows.size() << " rows to " << out_path << '\n';
      return kExitOk;
    }

    if (sub == train) {
      const auto mask = ChunkMask::parse(mask_text);
      auto gbm_cfg = gbm_flags.config(seed);
      const auto dataset = read_dataset(in_path);
      if (!grid_text.empty()) {
        std::vector<std::size_t> grid;
        std::stringstream ss(grid_text);
        for (std::string part; std::getline(ss, part, ',');) {
          try {
            grid.push_back(static_cast<std::size_t>(std::stoul(part)));
          } catch (const std::exception&) {
            throw DomainError("--grid value '" + part + "' is not a count");
          }
        }
        const auto set = build_training_set(dataset, feature_cfg, mask);
        const auto plan = make_folds(set.ids, k, seed);
        const auto result = grid_search_iterations(set.X, set.y, grid, gbm_cfg, plan.fold_of);
        for (const auto& s : result.scores) {
          out << "grid iterations " << s.iterations << " msle " << s.mean_msle << '\n';
        }
        gbm_cfg.n_iterations = result.best_iterations;
        out << "selected iterations " << gbm_cfg.n_iterations << '\n';
      }
      const auto model = train_full_model(dataset, feature_cfg, mask, gbm_cfg);
      save_model(model, out_path);
      out << "final training MSE "
          << (model.training_mse.empty() ? 0.0 : model.training_mse.back()) << '\n';
      const auto names = feature_names(dataset.vocabulary, mask);
      std::vector<std::size_t> order(model.importance.size());
      std::iota(order.begin(), order.end(), std::size_t{0});
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return model.importance[a] > model.importance[b];
      });
      order.resize(std::min<std::size_t>(20, order.size()));
      out << "rank  feature                         importance\n";
      for (std::size_t r = 0; r < order.size(); ++r) {
        out << std::setw(4) << r + 1 << "  " << std::left << std::setw(32) << names[order[r]]
            << std::right << std::fixed << std::setprecision(6) << model.importance[order[r]]
            << '\n';
        out.unsetf(std::ios::floatfield);
      }
      return kExitOk;
    }

    if (sub == eval || sub == sweep) {
      CvConfig cv;
      cv.family = parse_model_family(family_text);
      cv.mask = ChunkMask::parse(mask_text);
      cv.features = feature_cfg;
      cv.gbm = gbm_flags.config(seed);
      cv.dnn.radius_m = dnn_radius;
      cv.dnn.validate();
      const auto dataset = read_dataset(in_path);
      const auto plan = make_folds(target_ids(dataset), k, seed);

      if (sub == eval) {
        const auto report = cross_validate(dataset, cv, plan);
        print_report_table(out, report);
        if (!out_path.empty()) {
          write_file(out_path, [&](std::ostream& o) { o << report.to_json().dump(2) << '\n'; });
        } else {
          out << report.to_json().dump() << '\n';
        }
        return kExitOk;
      }

      const auto result = variant_sweep(dataset, cv, plan);
      write_file(out_path, [&](std::ostream& o) { write_sweep_csv(o, result); });
      if (!counts_path.empty()) {
        write_file(counts_path, [&](std::ostream& o) {
          write_sweep_counts_csv(o, result, to_string(cv.family));
        });
      }
      out << "rows " << result.rows.size() << '\n';
      out << "chunk      C1 C2 C3 C4 C5 C6\n";
      auto print_counts = [&](const char* label, const std::array<int, kChunkCount>& counts) {
        out << label;
        for (int c : counts) out << std::setw(3) << c;
        out << '\n';
      };
      print_counts("top10 MALE", result.counts_by_male);
      print_counts("top10 MSLE", result.counts_by_msle);
      return kExitOk;
    }

    if (sub == pcc_cmd) {
      NeighborSignal signal;
      if (signal_text == "checkins") {
        signal = NeighborSignal::checkins;
      } else if (signal_text == "likes") {
        signal = NeighborSignal::likes;
      } else {
        throw DomainError("--signal must be checkins or likes");
      }
      PccScale scale;
      if (scale_text == "log1p") {
        scale = PccScale::log1p;
      } else if (scale_text == "raw") {
        scale = PccScale::raw;
      } else {
        throw DomainError("--scale must be log1p or raw");
      }
      const auto dataset = read_dataset(in_path);
      const auto index = build_index(dataset.profiles, kPccRadii.back());
      const auto curve = pcc_by_radius(dataset, index, kPccRadii, signal, scale);
      if (out_path.empty()) {
        write_pcc_csv(out, curve);
      } else {
        write_file(out_path, [&](std::ostream& o) { write_pcc_csv(o, curve); });
        out << "wrote " << curve.size() << " rows to " << out_path << '\n';
      }
      return kExitOk;
    }

    if (sub == serve) {
      if (!fs::exists(model_path)) throw UsageError("model not found: " + model_path);
      auto dataset = read_dataset(in_path);
      auto model = load_model(model_path);
      ServiceConfig cfg;
      cfg.default_ranking_radius_m = ranking_radius;
      if (model.metadata.contains("mask")) {
        cfg.mask = ChunkMask::parse(model.metadata.at("mask").get<std::string>());
      }
      Service service(std::move(dataset), std::move(model), cfg);
      HttpServer server(service);
      std::string bind_error;
      if (!server.bind(host, port, bind_error)) {
        err << "error: " << bind_error << '\n';
        return kExitRuntime;
      }
      out << "serving " << service.dataset().profiles.size() << " profiles, model "
          << service.model_version() << " on http://" << host << ':' << server.port() << '\n'
          << std::flush;

      g_interrupted.store(false);
      auto previous_int = std::signal(SIGINT, on_interrupt);
      auto previous_term = std::signal(SIGTERM, on_interrupt);
      std::thread watcher([&server] {
        while (!g_interrupted.load()) std::this_thread::sleep_for(std::chrono::milliseconds(100));
        server.stop();
      });
      server.listen();
      g_interrupted.store(true);
      watcher.join();
      std::signal(SIGINT, previous_int);
      std::signal(SIGTERM, previous_term);
      out << "stopped\n";
      return kExitOk;
    }
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace checkin
