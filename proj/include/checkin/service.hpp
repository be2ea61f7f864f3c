#pragma once

// HTTP API for on-the-fly prediction at a user-selected point.
//
//   GET  /health
//   GET  /categories
//   GET  /neighbors?lat=&lng=&radius=
//   POST /predict   {"latitude","longitude","categories":[...],"radius"}
//
// Errors are {"error": reason} with a 4xx/5xx status. The dataset, index and
// model are loaded once and shared read-only by concurrent requests.

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "checkin/core.hpp"
#include "checkin/features.hpp"
#include "checkin/gbm.hpp"
#include "checkin/geo.hpp"

namespace httplib {
class Server;
}

namespace checkin {

struct ServiceConfig {
  FeatureConfig features{};
  /// Chunks the model was trained on; its feature_count must match.
  ChunkMask mask = ChunkMask::all();
  double default_ranking_radius_m = 500.0;
  std::string cors_origin = "*";
};

struct PredictRequest {
  GeoPoint location;
  std::vector<std::string> categories;
  double radius_m = 500.0;
};

struct NeighborRow {
  std::string id;
  std::string name;
  double distance_m = 0.0;
  Count checkins = 0;
  Count likes = 0;
};

struct PredictResponse {
  double predicted_checkins = 0.0;
  std::size_t rank = 1;
  std::size_t cohort_size = 0;
  std::optional<Count> cohort_min;
  std::optional<Count> cohort_max;
  std::optional<double> cohort_median;
  std::vector<NeighborRow> neighbors;  // the ranking cohort, nearest first

  [[nodiscard]] nlohmann::json to_json() const;
};

/// Status code plus JSON body.
struct HttpResult {
  int status = 200;
  nlohmann::json body;
};

class Service {
 public:
  /// The model is optional so the service can report "not ready".
  /// Throws DomainError when the model's feature count does not match the
  /// vocabulary and mask.
  Service(Dataset dataset, std::optional<GbmModel> model, ServiceConfig cfg = {});

  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  [[nodiscard]] bool ready() const noexcept { return model_.has_value(); }
  [[nodiscard]] const Dataset& dataset() const noexcept { return *dataset_; }
  [[nodiscard]] std::string model_version() const;

  /// Throws DomainError for invalid coordinates, radius or unknown labels.
  [[nodiscard]] PredictResponse predict(const PredictRequest& req) const;
  [[nodiscard]] std::vector<NeighborRow> neighbors(GeoPoint center, double radius_m) const;

  [[nodiscard]] HttpResult handle_health() const;
  [[nodiscard]] HttpResult handle_categories() const;
  [[nodiscard]] HttpResult handle_neighbors(const std::map<std::string, std::string>& query) const;
  [[nodiscard]] HttpResult handle_predict(const std::string& body) const;

  /// Registers the four routes plus CORS preflight on `server`.
  void mount(httplib::Server& server) const;

 private:
  std::unique_ptr<const Dataset> dataset_;
  SpatialIndex index_;
  std::optional<GbmModel> model_;
  ServiceConfig cfg_;
  std::string model_version_;
};

/// Parses and validates a /predict body. Throws DomainError with a reason.
PredictRequest parse_predict_request(const nlohmann::json& body, double default_radius_m);

/// Owns an httplib server with the service's routes mounted.
class HttpServer {
 public:
  explicit HttpServer(const Service& service);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Binds host:port (port 0 picks a free port). Returns false and sets
  /// `error` when the address is unavailable.
  bool bind(const std::string& host, int port, std::string& error);
  [[nodiscard]] int port() const noexcept { return port_; }
  /// Blocks serving requests until stop() is called.
  void listen();
  void stop();
  [[nodiscard]] bool running() const;

 private:
  std::unique_ptr<httplib::Server> server_;
  int port_ = -1;
};

}  // namespace checkin
