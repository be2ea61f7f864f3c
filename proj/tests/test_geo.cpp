#include <gtest/gtest.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "checkin/geo.hpp"

using namespace checkin;

namespace {

std::vector<PlaceProfile> random_places(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> lat(1.25, 1.45);
  std::uniform_real_distribution<double> lng(103.65, 104.00);
  std::vector<PlaceProfile> ps(n);
  for (std::size_t i = 0; i < n; ++i) {
    ps[i].id = "p" + std::to_string(i);
    ps[i].categories = {"cafe"};
    ps[i].location = {lat(rng), lng(rng)};
    ps[i].checkins = static_cast<Count>(i);
  }
  return ps;
}

}  // namespace

TEST(Haversine, KnownPairs) {
  const GeoPoint a{1.2868, 103.8545};
  const GeoPoint b{1.2834, 103.8607};
  EXPECT_NEAR(haversine(a, b), 786.1159147446452, 1e-6);
  EXPECT_NEAR(haversine(a, b), 785.7819928475317, 785.7819928475317 * 0.005);
  EXPECT_NEAR(haversine({0, 0}, {0, 180}), 20015114.442035925, 1e-3);
  EXPECT_EQ(haversine(a, a), 0.0);
}

// A sphere of mean radius overstates north-south distances near the equator
// by about 0.56% against the WGS84 ellipsoid, so 0.6% is the honest bound.
TEST(Haversine, CloseToEllipsoidalGeodesic) {
  std::ifstream in(std::filesystem::path(CHECKIN_TEST_DATA) / "geodesic_pairs.csv");
  ASSERT_TRUE(in);
  std::string line;
  std::getline(in, line);
  int rows = 0;
  while (std::getline(in, line)) {
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream fields(line);
    double lat1, lng1, lat2, lng2, expected;
    fields >> lat1 >> lng1 >> lat2 >> lng2 >> expected;
    EXPECT_NEAR(haversine({lat1, lng1}, {lat2, lng2}), expected, expected * 0.006) << line;
    ++rows;
  }
  EXPECT_EQ(rows, 100);
}

TEST(Haversine, SymmetryAndTriangleInequality) {
  const auto ps = random_places(60, 3);
  for (std::size_t i = 0; i + 2 < ps.size(); i += 3) {
    const auto a = ps[i].location;
    const auto b = ps[i + 1].location;
    const auto c = ps[i + 2].location;
    EXPECT_DOUBLE_EQ(haversine(a, b), haversine(b, a));
    EXPECT_LE(haversine(a, c), haversine(a, b) + haversine(b, c) + 1e-9);
  }
}

TEST(SpatialIndex, MatchesBruteForce) {
  const auto ps = random_places(3000, 5);
  const SpatialIndex index(ps, 1000.0);
  std::mt19937_64 rng(9);
  std::uniform_int_distribution<std::size_t> pick(0, ps.size() - 1);
  std::uniform_real_distribution<double> radius(1.0, 1000.0);

  const auto start = std::chrono::steady_clock::now();
  for (int q = 0; q < 1000; ++q) {
    const auto& center = ps[pick(rng)];
    const double r = radius(rng);
    const auto hits = index.radius_query(center.location, r, center.id);

    std::vector<std::string> expected;
    for (const auto& p : ps) {
      if (p.id != center.id && haversine(center.location, p.location) <= r) {
        expected.push_back(p.id);
      }
    }
    std::vector<std::string> got;
    for (const auto& h : hits) {
      got.push_back(h.profile->id);
      EXPECT_EQ(&ps[h.index], h.profile);
    }
    EXPECT_TRUE(std::is_sorted(hits.begin(), hits.end(), [](const auto& x, const auto& y) {
      return x.distance_m < y.distance_m;
    }));
    std::sort(expected.begin(), expected.end());
    std::sort(got.begin(), got.end());
    ASSERT_EQ(got, expected) << "query " << q;
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  EXPECT_LT(secs, 5.0);
}

TEST(SpatialIndex, KnnMatchesSortedDistances) {
  const auto ps = random_places(500, 8);
  const SpatialIndex index(ps, 200.0);
  const GeoPoint center{1.35, 103.82};
  const auto hits = index.knn(center, 7);
  ASSERT_EQ(hits.size(), 7u);
  std::vector<double> all;
  for (const auto& p : ps) all.push_back(haversine(center, p.location));
  std::sort(all.begin(), all.end());
  for (std::size_t i = 0; i < 7; ++i) EXPECT_DOUBLE_EQ(hits[i].distance_m, all[i]);

  EXPECT_EQ(index.knn(center, 10000).size(), ps.size());
  EXPECT_EQ(index.knn(ps[0].location, 3, ps[0].id).front().profile->id == ps[0].id, false);
  EXPECT_THROW(index.knn(center, 0), DomainError);
}

TEST(SpatialIndex, RadiusBoundsAndExclusion) {
  const auto ps = random_places(50, 2);
  const SpatialIndex index(ps, 500.0);
  EXPECT_THROW(index.radius_query(ps[0].location, 0.0), DomainError);
  EXPECT_THROW(index.radius_query(ps[0].location, 501.0), DomainError);
  for (const auto& h : index.radius_query(ps[0].location, 500.0, ps[0].id)) {
    EXPECT_NE(h.profile->id, ps[0].id);
  }
  EXPECT_THROW(SpatialIndex(ps, 0.0), DomainError);

  auto bad = ps;
  bad[3].location.latitude = 95.0;
  EXPECT_THROW(SpatialIndex(bad, 100.0), DomainError);
}

TEST(SpatialIndex, EmptyIndex) {
  const std::vector<PlaceProfile> none;
  const SpatialIndex index(none, 100.0);
  EXPECT_TRUE(index.empty());
  EXPECT_TRUE(index.radius_query({1.3, 103.8}, 50.0).empty());
  EXPECT_TRUE(index.knn({1.3, 103.8}, 3).empty());
}
