#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "farsec/error.hpp"
#include "farsec/tracking.hpp"
#include "support.hpp"

using namespace farsec;

namespace {

Detection car_at(double u, double v, double half = 10) { return {0, {u - half, v - half, u + half, v + half}, "car", 0.9}; }

double dist(Point2 a, Point2 b) { return std::hypot(a.u - b.u, a.v - b.v); }

Track track_through(std::initializer_list<Point2> pts) {
  Track t;
  std::int64_t f = 0;
  for (auto p : pts) t.observations.push_back({f++, 0.0, p, {p.u - 1, p.v - 1, p.u + 1, p.v + 1}, 1.0});
  return t;
}

}  // namespace

TEST_CASE("matching examples") {
  SUBCASE("close detection matches") {
    std::vector<Point2> t{{100, 100}}, d{{110, 100}};
    const auto m = greedy_match(t, d, 50);
    REQUIRE(m.size() == 1);
    CHECK(m[0].distance == doctest::Approx(10));
  }
  SUBCASE("far detection spawns a new track") {
    Tracker tracker;
    tracker.step(0, 0.0, {car_at(100, 100)});
    tracker.step(1, 0.1, {car_at(200, 100)});
    REQUIRE(tracker.active_tracks().size() == 2);
    CHECK(tracker.active_tracks()[0].observations.size() == 1);
    CHECK(tracker.active_tracks()[0].misses == 1);
    CHECK(tracker.active_tracks()[1].id == 1);
  }
  SUBCASE("threshold is strict") {
    std::vector<Point2> t{{0, 0}}, d{{50, 0}};
    CHECK(greedy_match(t, d, 50).empty());
  }
  SUBCASE("no crossed pairing") {
    std::vector<Point2> t{{0, 0}, {40, 0}}, d{{10, 0}, {30, 0}};
    const auto m = greedy_match(t, d, 50);
    REQUIRE(m.size() == 2);
    CHECK(m[0].track == 0);
    CHECK(m[0].detection == 0);
    CHECK(m[1].track == 1);
    CHECK(m[1].detection == 1);
  }
}

TEST_CASE("greedy is not minimum total cost in general") {
  // Tracks at 0 and 10, detections at 9 and 19. Greedy takes the 1 px pair
  // first and is left with 19 px (total 20); the crossed pairing costs 18.
  std::vector<Point2> t{{0, 0}, {10, 0}}, d{{9, 0}, {19, 0}};
  const auto m = greedy_match(t, d, 50);
  REQUIRE(m.size() == 2);
  CHECK(m[0].track == 1);
  CHECK(m[0].detection == 0);
  CHECK(m[1].track == 0);
  CHECK(m[1].detection == 1);
  CHECK(m[0].distance + m[1].distance == doctest::Approx(20));
}

TEST_CASE("matching is a partial injection under the threshold") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> coord(0, 300);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<Point2> t(rng() % 8), d(rng() % 8);
    for (auto& p : t) p = {coord(rng), coord(rng)};
    for (auto& p : d) p = {coord(rng), coord(rng)};
    const auto m = greedy_match(t, d, 50);
    std::set<std::size_t> ts, ds;
    for (const auto& a : m) {
      CHECK(ts.insert(a.track).second);
      CHECK(ds.insert(a.detection).second);
      CHECK(a.distance < 50);
      CHECK(a.distance == doctest::Approx(dist(t[a.track], d[a.detection])));
    }
    // Maximality: no unmatched pair is still within the threshold.
    for (std::size_t i = 0; i < t.size(); ++i)
      for (std::size_t j = 0; j < d.size(); ++j)
        if (!ts.count(i) && !ds.count(j)) CHECK(dist(t[i], d[j]) >= 50);
  }
}

TEST_CASE("tracks retire after more than max_misses misses") {
  Tracker tracker({50, 5, 5, 5});
  tracker.step(0, 0, {car_at(100, 100)});
  for (int f = 1; f <= 5; ++f) CHECK(tracker.step(f, f * 0.1, {}).empty());
  const auto retired = tracker.step(6, 0.6, {});
  REQUIRE(retired.size() == 1);
  CHECK_FALSE(retired[0].active);
  CHECK(tracker.active_tracks().empty());
}

TEST_CASE("track ids are never reused and observations strictly increase") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> coord(50, 600);
  Tracker tracker({50, 2, 5, 5}, 100);
  std::set<std::int64_t> seen;
  std::vector<Track> all;
  for (int f = 0; f < 300; ++f) {
    std::vector<Detection> dets;
    for (int k = 0; k < static_cast<int>(rng() % 4); ++k) dets.push_back(car_at(coord(rng), coord(rng)));
    for (auto& t : tracker.step(f, f / 30.0, dets)) all.push_back(std::move(t));
  }
  for (auto& t : tracker.finish()) all.push_back(std::move(t));
  for (const auto& t : all) {
    CHECK(t.id >= 100);
    CHECK(seen.insert(t.id).second);
    for (std::size_t i = 1; i < t.observations.size(); ++i)
      CHECK(t.observations[i].frame_index > t.observations[i - 1].frame_index);
    for (const auto& o : t.observations) CHECK(o.centroid == o.box.center());
  }
  CHECK_THROWS_AS(tracker.step(10, 0, {}), Error);
}

TEST_CASE("max trackable speed") {
  CHECK(max_trackable_speed(3.5, 15) == 52.5);
  CHECK(max_trackable_speed(3.5, 15) * 3.6 == doctest::Approx(189.0).epsilon(1e-12));
  CHECK(max_trackable_speed(1, 1) == 1.0);
  CHECK(max_trackable_speed(3.5, 30) == 105.0);
  CHECK_THROWS_AS(max_trackable_speed(0, 30), Error);
  CHECK_THROWS_AS(max_trackable_speed(3.5, -1), Error);
}

TEST_CASE("direction from the sign of the v displacement") {
  CHECK(assign_direction(track_through({{0, 100}, {0, 140}, {0, 180}})) == Direction::YIncreasing);
  CHECK(assign_direction(track_through({{0, 180}, {0, 100}})) == Direction::YDecreasing);
  CHECK(assign_direction(track_through({{0, 100}, {0, 102}})) == Direction::Unknown);
  CHECK(assign_direction(track_through({{0, 100}})) == Direction::Unknown);
  CHECK(direction_from_string(to_string(Direction::YDecreasing)) == Direction::YDecreasing);
}

TEST_CASE("centroid line examples") {
  SUBCASE("collinear diagonal") {
    const auto line = fit_centroid_line(track_through({{0, 0}, {1, 1}, {2, 2}}));
    CHECK(line.direction.u == doctest::Approx(1 / std::sqrt(2.0)));
    CHECK(line.direction.v == doctest::Approx(1 / std::sqrt(2.0)));
    CHECK(line.fit_residual == doctest::Approx(0).epsilon(1e-12));
    // The origin lies on the line.
    CHECK(-line.point.u * line.direction.v + line.point.v * line.direction.u == doctest::Approx(0));
  }
  SUBCASE("coincident points") {
    CHECK_THROWS_AS(fit_centroid_line(track_through({{3, 3}, {3, 3}, {3, 3}})), Error);
    CHECK_THROWS_AS(fit_centroid_line(track_through({{3, 3}})), Error);
  }
  SUBCASE("principal axis matches a 2x2 eigen-decomposition") {
    std::vector<std::vector<Point2>> cases = {{{0, 0}, {1, 0}, {2, 0}, {1, 1}}};
    std::mt19937_64 rng(3);
    std::normal_distribution<double> n(0, 1);
    for (int i = 0; i < 50; ++i) {
      std::vector<Point2> pts;
      const double a = n(rng), s = 0.2 * std::abs(n(rng));
      for (int k = 0; k < 12; ++k) {
        const double t = 10 * n(rng);
        pts.push_back({t * std::cos(a) + s * n(rng), t * std::sin(a) + s * n(rng)});
      }
      cases.push_back(pts);
    }
    for (const auto& pts : cases) {
      double mu = 0, mv = 0;
      for (auto p : pts) mu += p.u, mv += p.v;
      mu /= pts.size(), mv /= pts.size();
      double a = 0, b = 0, c = 0;
      for (auto p : pts) a += (p.u - mu) * (p.u - mu), b += (p.u - mu) * (p.v - mv), c += (p.v - mv) * (p.v - mv);
      // Largest eigenvalue of [[a b] [b c]] and its eigenvector.
      const double lambda = 0.5 * (a + c) + std::sqrt(0.25 * (a - c) * (a - c) + b * b);
      Point2 e = std::abs(b) > 1e-12 ? Point2{b, lambda - a} : (a >= c ? Point2{1, 0} : Point2{0, 1});
      const double norm = std::hypot(e.u, e.v);
      e = {e.u / norm, e.v / norm};
      const auto line = fit_centroid_line(std::span<const Point2>(pts));
      CHECK(std::abs(line.direction.u * e.u + line.direction.v * e.v) == doctest::Approx(1).epsilon(1e-9));
      const double smallest = a + c - lambda;
      CHECK(line.fit_residual == doctest::Approx(std::sqrt(std::max(0.0, smallest) / pts.size())).epsilon(1e-9));
    }
    const auto line = fit_centroid_line(track_through({{0, 0}, {1, 0}, {2, 0}, {1, 1}}));
    CHECK(std::abs(line.direction.u) == doctest::Approx(1));
    CHECK(line.fit_residual > 0);
  }
  SUBCASE("direction follows the motion") {
    CHECK(fit_centroid_line(track_through({{5, 100}, {5, 50}, {6, 0}})).direction.v < 0);
  }
}

TEST_CASE("box-line intersections") {
  const Box unit{0, 0, 10, 10};
  SUBCASE("horizontal") {
    const auto [a, b] = box_line_intersections(unit, {{3, 5}, {1, 0}, 0});
    CHECK(a == Point2{0, 5});
    CHECK(b == Point2{10, 5});
  }
  SUBCASE("diagonal through corners") {
    const double r = 1 / std::sqrt(2.0);
    const auto [a, b] = box_line_intersections(unit, {{0, 0}, {r, r}, 0});
    CHECK(a.u == doctest::Approx(0));
    CHECK(a.v == doctest::Approx(0));
    CHECK(b.u == doctest::Approx(10));
    CHECK(b.v == doctest::Approx(10));
  }
  SUBCASE("miss") {
    CHECK_THROWS_AS(box_line_intersections(unit, {{0, 20}, {1, 0}, 0}), Error);
    CHECK_THROWS_AS(box_line_intersections(unit, {{20, 0}, {0, 1}, 0}), Error);
  }
  SUBCASE("oblique line against a sampling oracle") {
    const Box box{2, 3, 8, 9};
    const double n = std::hypot(1.0, 0.2);
    const CentroidLine line{{0, 6}, {1 / n, 0.2 / n}, 0};
    const auto [a, b] = box_line_intersections(box, line);
    // Sample the line finely and find where it is inside the box.
    double first = NAN, last = NAN;
    for (int i = 0; i <= 2000000; ++i) {
      const double t = i * 1e-5;
      const double u = line.point.u + t * line.direction.u, v = line.point.v + t * line.direction.v;
      if (u >= box.x_min && u <= box.x_max && v >= box.y_min && v <= box.y_max) {
        if (std::isnan(first)) first = u;
        last = u;
      }
    }
    CHECK(a.u == doctest::Approx(first).epsilon(1e-4));
    CHECK(b.u == doctest::Approx(last).epsilon(1e-4));
    CHECK(a.u == 2.0);
    CHECK(b.u == 8.0);
    CHECK(a.v == doctest::Approx(6.4));
    CHECK(b.v == doctest::Approx(7.6));
  }
}

TEST_CASE("intersections lie on the boundary and on the line") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> c(0, 500), s(1, 100), ang(0, 2 * M_PI);
  int checked = 0;
  for (int i = 0; i < 2000; ++i) {
    const double x0 = c(rng), y0 = c(rng);
    const Box box{x0, y0, x0 + s(rng), y0 + s(rng)};
    const double th = ang(rng);
    const Point2 dir{std::cos(th), std::sin(th)};
    const Point2 inside{box.x_min + (box.x_max - box.x_min) * 0.3, box.y_min + (box.y_max - box.y_min) * 0.6};
    const Point2 p{inside.u - 40 * dir.u, inside.v - 40 * dir.v};
    const auto [a, b] = box_line_intersections(box, {p, dir, 0});
    for (auto q : {a, b}) {
      const double on_line = std::abs(-(q.u - p.u) * dir.v + (q.v - p.v) * dir.u);
      CHECK(on_line < 1e-9 * std::max(1.0, std::hypot(q.u - p.u, q.v - p.v)) + 1e-9);
      const double to_edge = std::min({std::abs(q.u - box.x_min), std::abs(q.u - box.x_max),
                                       std::abs(q.v - box.y_min), std::abs(q.v - box.y_max)});
      CHECK(to_edge < 1e-9);
      CHECK(q.u >= box.x_min - 1e-9);
      CHECK(q.u <= box.x_max + 1e-9);
      CHECK(q.v >= box.y_min - 1e-9);
      CHECK(q.v <= box.y_max + 1e-9);
    }
    CHECK((b.u - a.u) * dir.u + (b.v - a.v) * dir.v > 0);
    ++checked;
  }
  CHECK(checked == 2000);
}
