#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "checkin/eval.hpp"
#include "checkin/ingest.hpp"
#include "checkin/service.hpp"

namespace py = pybind11;
using namespace checkin;
using nlohmann::json;

namespace {

py::object to_py(const json& j) {
  switch (j.type()) {
    case json::value_t::null:
      return py::none();
    case json::value_t::boolean:
      return py::bool_(j.get<bool>());
    case json::value_t::number_integer:
      return py::int_(j.get<std::int64_t>());
    case json::value_t::number_unsigned:
      return py::int_(j.get<std::uint64_t>());
    case json::value_t::number_float:
      return py::float_(j.get<double>());
    case json::value_t::string:
      return py::str(j.get<std::string>());
    case json::value_t::array: {
      py::list out;
      for (const auto& v : j) out.append(to_py(v));
      return std::move(out);
    }
    default: {
      py::dict out;
      for (const auto& [k, v] : j.items()) out[py::str(k)] = to_py(v);
      return std::move(out);
    }
  }
}

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Matrix to_matrix(const Array& a) {
  if (a.ndim() != 2) throw DomainError("X must be a 2-D array");
  const auto rows = static_cast<std::size_t>(a.shape(0));
  const auto cols = static_cast<std::size_t>(a.shape(1));
  return Matrix(rows, cols, std::vector<double>(a.data(), a.data() + rows * cols));
}

py::array_t<double> to_array(const Matrix& m) {
  py::array_t<double> out({m.rows(), m.cols()});
  std::copy(m.data().begin(), m.data().end(), out.mutable_data());
  return out;
}

GbmConfig gbm_config(std::size_t iterations, double learning_rate, std::size_t max_depth,
                     const std::string& max_features, std::size_t min_leaf, std::uint64_t seed) {
  GbmConfig cfg;
  cfg.n_iterations = iterations;
  cfg.learning_rate = learning_rate;
  cfg.max_depth = max_depth;
  cfg.feature_subsample = FeatureSubsample::parse(max_features);
  cfg.min_samples_leaf = min_leaf;
  cfg.seed = seed;
  cfg.validate();
  return cfg;
}

// Keeps the dataset alive for as long as the service refers to it.
struct PyService {
  std::unique_ptr<Service> service;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Check-in prediction engine";

  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);

  m.def("haversine",
        [](double lat1, double lng1, double lat2, double lng2) {
          return haversine({lat1, lng1}, {lat2, lng2});
        },
        py::arg("lat1"), py::arg("lng1"), py::arg("lat2"), py::arg("lng2"));

  py::class_<Dataset>(m, "Dataset")
      .def("__len__", [](const Dataset& d) { return d.profiles.size(); })
      .def_property_readonly("vocabulary", [](const Dataset& d) { return d.vocabulary.labels(); })
      .def_property_readonly("food_labels", [](const Dataset& d) { return d.food_list.labels(); })
      .def("profiles",
           [](const Dataset& d) {
             py::list out;
             for (const auto& p : d.profiles) {
               auto obj = to_py(profile_to_json(p)).cast<py::dict>();
               obj["is_food"] = p.is_food;
               out.append(obj);
             }
             return out;
           })
      .def("target_ids", &target_ids)
      .def("save", [](const Dataset& d, const std::string& path) { save_dataset(d, path); })
      .def("validate", [](const Dataset& d) {
        py::list out;
        for (const auto& v : dataset_validate(d)) {
          out.append(py::dict(py::arg("profile_id") = v.profile_id, py::arg("rule") = v.rule,
                              py::arg("detail") = v.detail));
        }
        return out;
      });

  m.def("load_dataset", [](const std::string& path) { return load_dataset(path); });

  m.def("ingest",
        [](const std::string& path, const std::vector<std::string>& food_labels,
           std::optional<std::array<double, 4>> bbox, bool food_only) {
          auto parsed = parse_profiles_file(path);
          const BoundingBox box = bbox ? BoundingBox{(*bbox)[0], (*bbox)[1], (*bbox)[2], (*bbox)[3]}
                                       : BoundingBox::singapore();
          FoodCategoryList food(food_labels);
          auto kept = filter_scope(parsed.profiles, box, food, food_only);
          py::list rejected;
          for (const auto& r : parsed.rejected) {
            rejected.append(py::dict(py::arg("line_no") = r.line_no, py::arg("reason") = r.reason));
          }
          return py::make_tuple(make_dataset(std::move(kept), std::move(food)), rejected);
        },
        py::arg("path"), py::arg("food_labels"), py::arg("bbox") = py::none(),
        py::arg("food_only") = false,
        "Parse a JSONL file; returns (dataset, rejected lines). bbox is "
        "(min_lat, max_lat, min_lng, max_lng), Singapore by default.");

  m.def("synth",
        [](std::size_t n, std::uint64_t seed, std::size_t centers, double decay, double noise,
           std::size_t categories) {
          SynthConfig cfg;
          cfg.n_profiles = n;
          cfg.seed = seed;
          cfg.n_hotspot_centers = centers;
          cfg.decay_scale_m = decay;
          cfg.noise_sigma = noise;
          cfg.category_pool_size = categories;
          return synth_generate(cfg);
        },
        py::arg("n") = SynthConfig{}.n_profiles, py::arg("seed") = 1,
        py::arg("centers") = SynthConfig{}.n_hotspot_centers,
        py::arg("decay") = SynthConfig{}.decay_scale_m, py::arg("noise") = SynthConfig{}.noise_sigma,
        py::arg("categories") = SynthConfig{}.category_pool_size);

  m.def("category_summary", [](const Dataset& d) {
    py::list out;
    for (const auto& r : category_summary(d.profiles)) {
      out.append(py::dict(py::arg("label") = r.label, py::arg("count") = r.business_count,
                          py::arg("total_checkins") = r.total_checkins,
                          py::arg("expected") = r.expected_checkins_per_business,
                          py::arg("pct_above") = r.pct_above_expected));
    }
    return out;
  });

  m.def("feature_matrix",
        [](const Dataset& d, const std::string& mask, double category_radius) {
          FeatureConfig fc;
          fc.category_neighbor_radius_m = category_radius;
          fc.validate();
          const auto mk = ChunkMask::parse(mask);
          auto set = build_training_set(d, fc, mk);
          return py::make_tuple(to_array(set.X), py::array_t<double>(set.y.size(), set.y.data()),
                                set.ids, feature_names(d.vocabulary, mk));
        },
        py::arg("dataset"), py::arg("mask") = "111111",
        py::arg("category_radius") = FeatureConfig{}.category_neighbor_radius_m,
        "Returns (X, y, ids, column names) for every food profile; y is ln(1 + check-ins).");

  py::class_<GbmModel>(m, "Model")
      .def_property_readonly("n_trees", [](const GbmModel& g) { return g.trees.size(); })
      .def_property_readonly("feature_count", [](const GbmModel& g) { return g.feature_count; })
      .def_property_readonly("importance", [](const GbmModel& g) { return g.importance; })
      .def_property_readonly("training_mse", [](const GbmModel& g) { return g.training_mse; })
      .def_property_readonly("metadata", [](const GbmModel& g) { return to_py(g.metadata); })
      .def("fingerprint", &model_fingerprint)
      .def("predict",
           [](const GbmModel& g, const Array& X) {
             const auto mat = to_matrix(X);
             py::array_t<double> out(mat.rows());
             auto* dst = out.mutable_data();
             for (std::size_t i = 0; i < mat.rows(); ++i) dst[i] = predict(g, mat.row(i));
             return out;
           },
           "Raw scores for each row of X (ln(1 + check-ins) for models from train).")
      .def("save", [](const GbmModel& g, const std::string& path) { save_model(g, path); });

  m.def("load_model", [](const std::string& path) { return load_model(path); });

  m.def("fit",
        [](const Array& X, const std::vector<double>& y, std::size_t iterations,
           double learning_rate, std::size_t max_depth, const std::string& max_features,
           std::size_t min_leaf, std::uint64_t seed) {
          const auto mat = to_matrix(X);
          const auto cfg =
              gbm_config(iterations, learning_rate, max_depth, max_features, min_leaf, seed);
          py::gil_scoped_release release;
          return fit(mat, y, cfg);
        },
        py::arg("X"), py::arg("y"), py::arg("iterations") = 1000, py::arg("learning_rate") = 0.1,
        py::arg("max_depth") = 10, py::arg("max_features") = "sqrt", py::arg("min_leaf") = 1,
        py::arg("seed") = 0);

  m.def("train",
        [](const Dataset& d, const std::string& mask, std::size_t iterations,
           double learning_rate, std::size_t max_depth, const std::string& max_features,
           std::size_t min_leaf, std::uint64_t seed) {
          const auto cfg =
              gbm_config(iterations, learning_rate, max_depth, max_features, min_leaf, seed);
          const auto mk = ChunkMask::parse(mask);
          py::gil_scoped_release release;
          return train_full_model(d, FeatureConfig{}, mk, cfg);
        },
        py::arg("dataset"), py::arg("mask") = "111111", py::arg("iterations") = 1000,
        py::arg("learning_rate") = 0.1, py::arg("max_depth") = 10,
        py::arg("max_features") = "sqrt", py::arg("min_leaf") = 1, py::arg("seed") = 0);

  m.def("cross_validate",
        [](const Dataset& d, const std::string& family, const std::string& mask, std::size_t k,
           std::uint64_t seed, std::size_t iterations, std::size_t max_depth, double dnn_radius) {
          CvConfig cfg;
          cfg.family = parse_model_family(family);
          cfg.mask = ChunkMask::parse(mask);
          cfg.gbm.n_iterations = iterations;
          cfg.gbm.max_depth = max_depth;
          cfg.gbm.seed = seed;
          cfg.dnn.radius_m = dnn_radius;
          const auto plan = make_folds(target_ids(d), k, seed);
          EvaluationReport report;
          {
            py::gil_scoped_release release;
            report = cross_validate(d, cfg, plan);
          }
          return to_py(report.to_json());
        },
        py::arg("dataset"), py::arg("family") = "gbm", py::arg("mask") = "111111",
        py::arg("k") = 10, py::arg("seed") = 0, py::arg("iterations") = 1000,
        py::arg("max_depth") = 10, py::arg("dnn_radius") = DnnConfig{}.radius_m);

  m.def("pcc_by_radius",
        [](const Dataset& d, const std::string& signal, const std::string& scale) {
          if (signal != "checkins" && signal != "likes") {
            throw DomainError("signal must be checkins or likes");
          }
          if (scale != "log1p" && scale != "raw") throw DomainError("scale must be log1p or raw");
          const SpatialIndex index(d.profiles, kPccRadii.back());
          const auto curve =
              pcc_by_radius(d, index, kPccRadii,
                            signal == "likes" ? NeighborSignal::likes : NeighborSignal::checkins,
                            scale == "raw" ? PccScale::raw : PccScale::log1p);
          py::list out;
          for (const auto& p : curve) out.append(py::make_tuple(p.radius_m, p.pcc));
          return out;
        },
        py::arg("dataset"), py::arg("signal") = "checkins", py::arg("scale") = "log1p");

  using Vec = std::vector<double>;
  m.def("msle", [](const Vec& p, const Vec& a) { return msle(p, a); }, py::arg("preds"),
        py::arg("actuals"));
  m.def("male", [](const Vec& p, const Vec& a) { return male(p, a); }, py::arg("preds"),
        py::arg("actuals"));
  m.def("pcc", [](const Vec& x, const Vec& y) { return pcc(x, y); }, py::arg("x"), py::arg("y"));
  m.def("ttest_ind",
        [](const std::vector<double>& a, const std::vector<double>& b) {
          const auto r = ttest_ind(a, b);
          return py::dict(py::arg("t") = r.t, py::arg("p") = r.p, py::arg("df") = r.df);
        },
        py::arg("a"), py::arg("b"));

  py::class_<PyService>(m, "Service")
      .def(py::init([](const Dataset& d, std::optional<GbmModel> model) {
             ServiceConfig cfg;
             if (model && model->metadata.contains("mask")) {
               cfg.mask = ChunkMask::parse(model->metadata.at("mask").get<std::string>());
             }
             return PyService{std::make_unique<Service>(d, std::move(model), cfg)};
           }),
           py::arg("dataset"), py::arg("model") = py::none())
      .def("health", [](const PyService& s) { return to_py(s.service->handle_health().body); })
      .def("categories",
           [](const PyService& s) { return to_py(s.service->handle_categories().body); })
      .def("neighbors",
           [](const PyService& s, double lat, double lng, double radius) {
             json rows = json::array();
             for (const auto& r : s.service->neighbors({lat, lng}, radius)) {
               rows.push_back({{"id", r.id},
                               {"name", r.name},
                               {"distance_m", r.distance_m},
                               {"checkins", r.checkins},
                               {"likes", r.likes}});
             }
             return to_py(rows);
           },
           py::arg("lat"), py::arg("lng"), py::arg("radius") = 500.0)
      .def("predict",
           [](const PyService& s, double lat, double lng, const std::vector<std::string>& cats,
              double radius) {
             if (!s.service->ready()) throw DomainError("model not loaded");
             return to_py(s.service->predict({{lat, lng}, cats, radius}).to_json());
           },
           py::arg("lat"), py::arg("lng"), py::arg("categories") = std::vector<std::string>{},
           py::arg("radius") = 500.0);

  m.attr("__version__") = "0.1.0";
}
