#include "checkin/service.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <httplib.h>

#include "checkin/baselines.hpp"

namespace checkin {

using nlohmann::json;

namespace {

constexpr double kMaxServiceRadius = 1000.0;

void check_radius(double radius_m) {
  if (!std::isfinite(radius_m) || !(radius_m > 0.0) || radius_m > kMaxServiceRadius) {
    throw DomainError("radius must be in (0, 1000] meters");
  }
}

json error_body(const std::string& reason) { return {{"error", reason}}; }

json neighbor_json(const NeighborRow& row) {
  return {{"id", row.id},
          {"name", row.name},
          {"distance_m", row.distance_m},
          {"checkins", row.checkins},
          {"likes", row.likes}};
}

double parse_number(const std::string& text, const char* what) {
  try {
    std::size_t used = 0;
    const double value = std::stod(text, &used);
    if (used == text.size() && std::isfinite(value)) return value;
  } catch (const std::exception&) {
  }
  throw DomainError(std::string("query parameter '") + what + "' is not a number");
}

}  // namespace

json PredictResponse::to_json() const {
  json rows = json::array();
  for (const auto& row : neighbors) rows.push_back(neighbor_json(row));
  return {{"predicted_checkins", predicted_checkins},
          {"rank", rank},
          {"cohort_size", cohort_size},
          {"cohort_min", cohort_min ? json(*cohort_min) : json(nullptr)},
          {"cohort_max", cohort_max ? json(*cohort_max) : json(nullptr)},
          {"cohort_median", cohort_median ? json(*cohort_median) : json(nullptr)},
          {"neighbors", std::move(rows)}};
}

PredictRequest parse_predict_request(const json& body, double default_radius_m) {
  if (!body.is_object()) throw DomainError("request body must be a JSON object");
  auto number = [&](const char* key) {
    auto it = body.find(key);
    if (it == body.end()) throw DomainError(std::string("missing field '") + key + "'");
    if (!it->is_number()) throw DomainError(std::string("field '") + key + "' must be a number");
    return it->get<double>();
  };
  PredictRequest req;
  req.location = {number("latitude"), number("longitude")};
  if (!req.location.valid()) throw DomainError("latitude/longitude out of range");
  if (auto it = body.find("categories"); it != body.end() && !it->is_null()) {
    if (!it->is_array()) throw DomainError("field 'categories' must be an array of strings");
    for (const auto& label : *it) {
      if (!label.is_string()) throw DomainError("field 'categories' must be an array of strings");
      req.categories.push_back(label.get<std::string>());
    }
  }
  req.radius_m = body.contains("radius") && !body.at("radius").is_null() ? number("radius")
                                                                          : default_radius_m;
  check_radius(req.radius_m);
  return req;
}

Service::Service(Dataset dataset, std::optional<GbmModel> model, ServiceConfig cfg)
    : dataset_(std::make_unique<const Dataset>(std::move(dataset))),
      model_(std::move(model)),
      cfg_(std::move(cfg)) {
  cfg_.features.validate();
  check_radius(cfg_.default_ranking_radius_m);
  if (!cfg_.mask.any()) throw DomainError("service chunk mask selects no chunks");
  index_ = SpatialIndex(dataset_->profiles, std::max(cfg_.features.max_radius(), kMaxServiceRadius));
  if (model_) {
    const auto expected = masked_dimension(dataset_->vocabulary.size(), cfg_.mask);
    if (model_->feature_count != expected) {
      throw DomainError("model expects " + std::to_string(model_->feature_count) +
                        " features but mask " + cfg_.mask.to_string() + " over " +
                        std::to_string(dataset_->vocabulary.size()) + " categories gives " +
                        std::to_string(expected));
    }
    model_version_ = "gbm-v" + std::to_string(kModelFormatVersion) + "-" +
                     model_fingerprint(*model_).substr(0, 12);
  }
}

std::string Service::model_version() const { return model_version_; }

std::vector<NeighborRow> Service::neighbors(GeoPoint center, double radius_m) const {
  check_radius(radius_m);
  if (!center.valid()) throw DomainError("latitude/longitude out of range");
  std::vector<NeighborRow> rows;
  for (const auto& hit : index_.radius_query(center, radius_m)) {
    const auto& p = *hit.profile;
    rows.push_back({p.id, p.name, hit.distance_m, p.checkins, p.likes});
  }
  return rows;
}

PredictResponse Service::predict(const PredictRequest& req) const {
  if (!model_) throw std::logic_error("model not loaded");
  check_radius(req.radius_m);
  if (!req.location.valid()) throw DomainError("latitude/longitude out of range");
  const auto categories = normalize_labels(req.categories);
  for (const auto& label : categories) {
    if (!dataset_->vocabulary.find(label)) throw DomainError("unknown category: '" + label + "'");
  }

  // The pin is hypothetical, so nothing is excluded from its neighborhood.
  const auto fv =
      extract_features(req.location, categories, index_, dataset_->vocabulary, cfg_.features);
  const auto x = apply_mask(fv, cfg_.mask);

  PredictResponse resp;
  resp.predicted_checkins = std::max(0.0, std::expm1(model_->predict(x)));
  resp.neighbors = neighbors(req.location, req.radius_m);
  resp.cohort_size = resp.neighbors.size();
  std::vector<Count> counts;
  counts.reserve(resp.neighbors.size());
  for (const auto& row : resp.neighbors) {
    counts.push_back(row.checkins);
    // Ties favor the hypothetical business.
    if (static_cast<double>(row.checkins) > resp.predicted_checkins) ++resp.rank;
  }
  if (!counts.empty()) {
    resp.cohort_min = *std::min_element(counts.begin(), counts.end());
    resp.cohort_max = *std::max_element(counts.begin(), counts.end());
    resp.cohort_median = median_checkins(counts);
  }
  return resp;
}

HttpResult Service::handle_health() const {
  json body = {{"status", ready() ? "ready" : "loading"},
               {"dataset_size", dataset_->profiles.size()},
               {"model_version", ready() ? json(model_version_) : json(nullptr)}};
  return {ready() ? 200 : 503, std::move(body)};
}

HttpResult Service::handle_categories() const {
  json labels = json::array();
  for (const auto& label : dataset_->vocabulary.labels()) {
    labels.push_back({{"label", label}, {"is_food", dataset_->food_list.contains(label)}});
  }
  return {200, {{"categories", std::move(labels)}}};
}

HttpResult Service::handle_neighbors(const std::map<std::string, std::string>& query) const {
  try {
    auto get = [&](const char* key) -> std::optional<double> {
      auto it = query.find(key);
      if (it == query.end() || it->second.empty()) return std::nullopt;
      return parse_number(it->second, key);
    };
    const auto lat = get("lat");
    const auto lng = get("lng");
    if (!lat || !lng) return {400, error_body("query parameters 'lat' and 'lng' are required")};
    const double radius = get("radius").value_or(cfg_.default_ranking_radius_m);
    json rows = json::array();
    for (const auto& row : neighbors({*lat, *lng}, radius)) rows.push_back(neighbor_json(row));
    return {200, {{"neighbors", std::move(rows)}}};
  } catch (const DomainError& e) {
    return {400, error_body(e.what())};
  }
}

HttpResult Service::handle_predict(const std::string& body) const {
  if (!ready()) return {503, error_body("model not loaded")};
  json doc;
  try {
    doc = json::parse(body);
  } catch (const json::parse_error&) {
    return {400, error_body("request body is not valid JSON")};
  }
  try {
    const auto req = parse_predict_request(doc, cfg_.default_ranking_radius_m);
    return {200, predict(req).to_json()};
  } catch (const DomainError& e) {
    return {400, error_body(e.what())};
  }
}

void Service::mount(httplib::Server& server) const {
  const std::string origin = cfg_.cors_origin;
  auto send = [origin](httplib::Response& res, const HttpResult& result) {
    res.status = result.status;
    res.set_header("Access-Control-Allow-Origin", origin);
    res.set_content(result.body.dump(), "application/json");
  };
  server.Get("/health", [this, send](const httplib::Request&, httplib::Response& res) {
    send(res, handle_health());
  });
  server.Get("/categories", [this, send](const httplib::Request&, httplib::Response& res) {
    send(res, handle_categories());
  });
  server.Get("/neighbors", [this, send](const httplib::Request& req, httplib::Response& res) {
    std::map<std::string, std::string> query;
    for (const auto& [key, value] : req.params) query.emplace(key, value);
    send(res, handle_neighbors(query));
  });
  server.Post("/predict", [this, send](const httplib::Request& req, httplib::Response& res) {
    send(res, handle_predict(req.body));
  });
  server.Options(R"(/.*)", [origin](const httplib::Request&, httplib::Response& res) {
    res.status = 204;
    res.set_header("Access-Control-Allow-Origin", origin);
    res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type");
  });
  server.set_exception_handler(
      [send](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
        std::string reason = "internal error";
        try {
          if (ep) std::rethrow_exception(ep);
        } catch (const std::exception& e) {
          reason = e.what();
        } catch (...) {
        }
        send(res, {500, error_body(reason)});
      });
}

HttpServer::HttpServer(const Service& service) : server_(std::make_unique<httplib::Server>()) {
  // httplib defaults to SO_REUSEPORT, which lets a second server share a
  // busy port silently. SO_REUSEADDR alone still allows a quick restart.
  server_->set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void*>(&yes), sizeof(yes));
  });
  // Headers and body go out in separate writes; without this, Nagle plus
  // delayed ACKs add ~40 ms to every keep-alive response.
  server_->set_tcp_nodelay(true);
  service.mount(*server_);
}

HttpServer::~HttpServer() {
  if (server_) server_->stop();
}

bool HttpServer::bind(const std::string& host, int port, std::string& error) {
  if (port == 0) {
    port_ = server_->bind_to_any_port(host);
  } else {
    port_ = server_->bind_to_port(host, port) ? port : -1;
  }
  if (port_ < 0) {
    error = "cannot bind " + host + ":" + std::to_string(port) +
            " (address in use or not available)";
    return false;
  }
  return true;
}

void HttpServer::listen() { server_->listen_after_bind(); }

void HttpServer::stop() { server_->stop(); }

bool HttpServer::running() const { return server_->is_running(); }

}  // namespace checkin
