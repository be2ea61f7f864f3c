#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <random>

#include "checkin/geo.hpp"
#include "checkin/ingest.hpp"

namespace checkin {

void SynthConfig::validate() const {
  box.validate();
  auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
  if (n_profiles == 0) throw DomainError("synth: n_profiles must be positive");
  if (category_pool_size < 2) throw DomainError("synth: category_pool_size must be >= 2");
  if (!positive(decay_scale_m)) throw DomainError("synth: decay scale must be positive");
  if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) {
    throw DomainError("synth: noise sigma must be non-negative");
  }
  if (!positive(base_checkins)) throw DomainError("synth: base check-ins must be positive");
  if (!(attractor_gain >= 0.0)) throw DomainError("synth: attractor gain must be non-negative");
  if (!(clustered_fraction >= 0.0 && clustered_fraction <= 1.0)) {
    throw DomainError("synth: clustered fraction must be in [0, 1]");
  }
  if (!positive(cluster_spread_m)) throw DomainError("synth: cluster spread must be positive");
  if (!(food_fraction > 0.0 && food_fraction <= 1.0)) {
    throw DomainError("synth: food fraction must be in (0, 1]");
  }
  if (!(category_sigma >= 0.0)) throw DomainError("synth: category sigma must be non-negative");
  if (!positive(spillover_radius_m) || spillover_radius_m > 1000.0) {
    throw DomainError("synth: spillover radius must be in (0, 1000] meters");
  }
  if (!(spillover_sigma >= 0.0)) throw DomainError("synth: spillover sigma must be non-negative");
  if (!(non_food_response >= 0.0)) {
    throw DomainError("synth: non-food response must be non-negative");
  }
}

namespace {

constexpr double kMetersPerDegree = kEarthRadiusMeters * std::numbers::pi / 180.0;

std::string padded(const char* prefix, std::size_t value, int width) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s%0*zu", prefix, width, value);
  return buf;
}

}  // namespace

Dataset synth_generate(const SynthConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  const auto& box = cfg.box;
  auto uniform_point = [&] {
    return GeoPoint{box.min_latitude + unit(rng) * (box.max_latitude - box.min_latitude),
                    box.min_longitude + unit(rng) * (box.max_longitude - box.min_longitude)};
  };

  // Category pool: food labels first, the rest non-food. Label popularity
  // is Zipf-like so a few categories dominate, as in real directories.
  const std::size_t n_food_labels =
      std::clamp<std::size_t>(static_cast<std::size_t>(std::lround(
                                  static_cast<double>(cfg.category_pool_size) * 0.6)),
                              1, cfg.category_pool_size - 1);
  std::vector<std::string> food_labels;
  std::vector<std::string> other_labels;
  std::vector<double> log_multiplier(cfg.category_pool_size);
  for (std::size_t i = 0; i < cfg.category_pool_size; ++i) {
    if (i < n_food_labels) {
      food_labels.push_back(padded("food ", i, 2));
    } else {
      other_labels.push_back(padded("shop ", i - n_food_labels, 2));
    }
    log_multiplier[i] = cfg.category_sigma * gauss(rng);
  }
  // Spillover weight of each food label on food businesses around it.
  std::vector<double> spill_weight(cfg.category_pool_size, 0.0);
  for (std::size_t i = 0; i < n_food_labels; ++i) spill_weight[i] = gauss(rng);
  auto zipf_weights = [](std::size_t n) {
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i) w[i] = 1.0 / static_cast<double>(i + 1);
    return w;
  };
  auto food_w = zipf_weights(food_labels.size());
  auto other_w = zipf_weights(other_labels.size());
  std::discrete_distribution<std::size_t> pick_food(food_w.begin(), food_w.end());
  std::discrete_distribution<std::size_t> pick_other(other_w.begin(), other_w.end());

  std::vector<GeoPoint> attractors;
  attractors.reserve(cfg.n_hotspot_centers);
  for (std::size_t i = 0; i < cfg.n_hotspot_centers; ++i) attractors.push_back(uniform_point());

  std::vector<PlaceProfile> profiles;
  profiles.reserve(cfg.n_profiles);
  struct Draw {
    double log_mult = 0.0;
    double intensity = 0.0;
    double spill = 0.0;  // spillover weight this profile exerts on neighbors
    double noise = 1.0;
  };
  std::vector<Draw> draws;
  draws.reserve(cfg.n_profiles);
  const int id_width = static_cast<int>(std::to_string(cfg.n_profiles).size());
  for (std::size_t i = 0; i < cfg.n_profiles; ++i) {
    PlaceProfile p;
    p.id = padded("p", i + 1, id_width);
    p.name = padded("Synthetic Place ", i + 1, id_width);

    const bool food = unit(rng) < cfg.food_fraction;

    if (!attractors.empty() && unit(rng) < cfg.clustered_fraction) {
      const auto& a = attractors[static_cast<std::size_t>(unit(rng) * attractors.size()) %
                                 attractors.size()];
      GeoPoint loc;
      int tries = 0;
      do {
        const double north = cfg.cluster_spread_m * gauss(rng);
        const double east = cfg.cluster_spread_m * gauss(rng);
        loc.latitude = a.latitude + north / kMetersPerDegree;
        loc.longitude =
            a.longitude +
            east / (kMetersPerDegree * std::cos(a.latitude * std::numbers::pi / 180.0));
      } while (!box.contains(loc) && ++tries < 16);
      if (!box.contains(loc)) loc = uniform_point();
      p.location = loc;
    } else {
      p.location = uniform_point();
    }

    const std::size_t n_labels = 1 + (unit(rng) < 0.35 ? 1 : 0) + (unit(rng) < 0.10 ? 1 : 0);
    Draw draw;
    std::vector<std::string> labels;
    std::vector<std::size_t> pool_index;
    for (std::size_t j = 0; j < n_labels; ++j) {
      std::size_t idx = food ? pick_food(rng) : n_food_labels + pick_other(rng);
      if (std::find(pool_index.begin(), pool_index.end(), idx) != pool_index.end()) continue;
      pool_index.push_back(idx);
      labels.push_back(idx < n_food_labels ? food_labels[idx] : other_labels[idx - n_food_labels]);
      draw.log_mult += log_multiplier[idx];
      draw.spill += spill_weight[idx];
    }
    draw.log_mult /= static_cast<double>(pool_index.size());
    draw.spill /= static_cast<double>(pool_index.size());
    p.categories = normalize_labels(labels);
    p.is_food = food;

    if (!attractors.empty()) {
      double nearest = std::numeric_limits<double>::infinity();
      for (const auto& a : attractors) nearest = std::min(nearest, haversine(p.location, a));
      draw.intensity = std::exp(-nearest / cfg.decay_scale_m);
    }
    draw.noise = cfg.noise_sigma > 0.0 ? std::exp(cfg.noise_sigma * gauss(rng)) : 1.0;
    draws.push_back(draw);
    profiles.push_back(std::move(p));
  }

  // Second pass: food businesses gain or lose from the labels of the food
  // businesses around them, then check-ins and likes are drawn.
  const SpatialIndex index(profiles, cfg.spillover_radius_m);
  for (std::size_t i = 0; i < profiles.size(); ++i) {
    auto& p = profiles[i];
    const auto& draw = draws[i];
    double log_effect = draw.log_mult;
    double gain = cfg.attractor_gain;
    if (p.is_food) {
      double spill = 0.0;
      std::size_t n = 0;
      for (const auto& hit : index.radius_query(p.location, cfg.spillover_radius_m, p.id)) {
        if (!hit.profile->is_food) continue;
        spill += draws[hit.index].spill;
        ++n;
      }
      if (n > 0) log_effect += cfg.spillover_sigma * spill / std::sqrt(static_cast<double>(n));
    } else {
      gain *= cfg.non_food_response;
    }
    const double expected =
        cfg.base_checkins * (1.0 + gain * std::exp(log_effect) * draw.intensity);
    p.checkins = static_cast<Count>(std::llround(expected * draw.noise));

    // Likes track the page's own popularity only loosely and carry no
    // spatial term of their own.
    const double like_noise = std::exp(gauss(rng));
    p.likes = static_cast<Count>(
        std::llround(20.0 * std::pow(static_cast<double>(p.checkins) + 1.0, 0.3) * like_noise));
  }

  return make_dataset(std::move(profiles), FoodCategoryList(food_labels));
}

}  // namespace checkin
