#include <doctest.h>

#include <fstream>
#include <random>

#include "farsec/detection.hpp"
#include "farsec/error.hpp"
#include "support.hpp"

using namespace farsec;

namespace {

Detection det(std::int64_t frame, double x0, double y0, double x1, double y1, std::string label = "car",
              double conf = 0.9) {
  return {frame, {x0, y0, x1, y1}, std::move(label), conf};
}

Frame frame_at(std::int64_t index, int w = 1280, int h = 720) {
  Frame f;
  f.index = index;
  f.width = w;
  f.height = h;
  return f;
}

DetectionTrace random_trace(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> x(0, 1200), y(0, 650), size(1, 80), conf(0, 1);
  const char* labels[] = {"car", "truck", "person", "bus"};
  DetectionTrace t;
  t.header = {29.97, 1280, 720};
  for (int i = 0; i < n; ++i) {
    const double x0 = x(rng), y0 = y(rng);
    t.detections.push_back(det(i / 3, x0, y0, x0 + size(rng), y0 + size(rng), labels[rng() % 4], conf(rng)));
  }
  return t;
}

}  // namespace

TEST_CASE("trace round trip is exact") {
  test::TempDir dir("trace");
  const auto t = random_trace(1000, 1);
  write_trace(t, dir / "t.trace");
  CHECK(read_trace(dir / "t.trace") == t);

  DetectionTrace empty;
  empty.header = {std::nullopt, 640, 480};
  write_trace(empty, dir / "e.trace");
  const auto e = read_trace(dir / "e.trace");
  CHECK(e.detections.empty());
  CHECK(e == empty);
}

TEST_CASE("malformed trace lines carry the line number") {
  test::TempDir dir("badtrace");
  auto expect_error = [&](const std::string& body, const std::string& needle) {
    std::ofstream(dir / "b.trace") << body;
    try {
      read_trace(dir / "b.trace");
      FAIL("expected TraceParseError");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::TraceParseError);
      CHECK(std::string(e.what()).find(needle) != std::string::npos);
    }
  };
  expect_error("#farsec-trace v1 fps=30 width=100 height=100\n0 1 1 5 5 car 0.9\n1 9 1 5 5 car 0.9\n", "line 3");
  expect_error("#farsec-trace v1 fps=30 width=100 height=100\n0 1 1 5 car 0.9\n", "line 2");
  expect_error("#farsec-trace v1 fps=30 width=100 height=100\n0 a 1 5 5 car 0.9\n", "line 2");
  expect_error("0 1 1 5 5 car 0.9\n", "line 1");
}

TEST_CASE("trace backend replays frames verbatim") {
  DetectionTrace t;
  t.header = {30.0, 1280, 720};
  t.detections = {det(3, 10, 10, 50, 50), det(7, 100, 100, 150, 140), det(7, 300, 200, 360, 260, "truck", 0.5),
                  det(7, 10, 10, 20, 20, "car", 0.1)};
  TraceDetector backend(t);
  CHECK(backend.detect(frame_at(0)).empty());
  const auto seven = backend.detect(frame_at(7));
  REQUIRE(seven.size() == 2);
  CHECK(seven[0] == t.detections[1]);
  CHECK(seven[1] == t.detections[2]);
  CHECK(backend.frame_count() == 8);
  CHECK(backend.detect(frame_at(7)) == seven);
}

TEST_CASE("trace boxes are rescaled to the normalized frame size") {
  DetectionTrace t;
  t.header = {30.0, 3840, 2160};
  t.detections = {det(0, 100, 200, 300, 400)};
  TraceDetector backend(t);
  const auto d = backend.detect(frame_at(0, 1920, 1080));
  REQUIRE(d.size() == 1);
  CHECK(d[0].box == Box{50, 100, 150, 200});
}

TEST_CASE("filter_cars keeps cars in order and is idempotent") {
  CHECK(filter_cars({}).empty());
  const auto three = filter_cars({det(0, 0, 0, 1, 1, "car"), det(0, 0, 0, 1, 1, "truck"), det(0, 0, 0, 1, 1, "person")});
  REQUIRE(three.size() == 1);
  CHECK(three[0].class_label == "car");

  std::mt19937_64 rng(2);
  std::vector<Detection> mixed;
  std::vector<Detection> expected;
  int cars = 0;
  for (int i = 0; i < 100; ++i) {
    const bool is_car = (i * 37) % 100 < 37;
    mixed.push_back(det(i, i, 0, i + 1, 1, is_car ? "car" : (rng() % 2 ? "bus" : "person")));
    if (is_car) {
      expected.push_back(mixed.back());
      ++cars;
    }
  }
  CHECK(cars == 37);
  const auto filtered = filter_cars(mixed);
  CHECK(filtered == expected);
  CHECK(filter_cars(filtered) == filtered);
}

TEST_CASE("format_number round-trips doubles") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> d(-1e6, 1e6);
  for (int i = 0; i < 1000; ++i) {
    const double v = d(rng);
    CHECK(std::stod(format_number(v)) == v);
  }
  CHECK(format_number(30.0) == "30");
}
