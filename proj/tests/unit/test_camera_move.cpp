#include <doctest.h>

#include <algorithm>
#include <random>

#include "farsec/camera_move.hpp"
#include "farsec/error.hpp"
#include "farsec/frame.hpp"

using namespace farsec;

namespace {

Frame textured(int w, int h, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> d(30, 220);
  Frame f = Frame::filled(w, h, 1, 0);
  for (auto& p : f.pixels) p = static_cast<std::uint8_t>(d(rng));
  return f;
}

// Count of pixels whose luma moved by more than delta, computed directly.
double fraction_oracle(const Frame& a, const Frame& b, int delta) {
  int changed = 0;
  for (int y = 0; y < a.height; ++y)
    for (int x = 0; x < a.width; ++x) changed += std::abs(a.at(x, y) - b.at(x, y)) > delta;
  return static_cast<double>(changed) / (a.width * a.height);
}

}  // namespace

TEST_CASE("pixel_change_fraction examples") {
  Frame a = textured(100, 100, 1);
  CHECK(pixel_change_fraction(a, a, 10) == 0.0);

  Frame inv = a;
  for (auto& p : inv.pixels) p = static_cast<std::uint8_t>(255 - p);
  // 255 - p differs from p by more than 10 unless p is within 5 of 127.5.
  CHECK(pixel_change_fraction(a, inv, 10) == doctest::Approx(fraction_oracle(a, inv, 10)));
  Frame black = Frame::filled(20, 20, 3, 0);
  Frame white = Frame::filled(20, 20, 3, 255);
  CHECK(pixel_change_fraction(black, white, 10) == 1.0);

  Frame block = a;
  for (int y = 40; y < 50; ++y)
    for (int x = 10; x < 20; ++x) block.at(x, y) = static_cast<std::uint8_t>(block.at(x, y) + 50);
  CHECK(pixel_change_fraction(a, block, 10) == doctest::Approx(0.01));
  CHECK(pixel_change_fraction(a, block, 10) == doctest::Approx(fraction_oracle(a, block, 10)));

  CHECK_THROWS_AS(pixel_change_fraction(a, textured(50, 100, 2), 10), Error);
}

TEST_CASE("first frame never triggers") {
  CameraMoveDetector det;
  auto v = det.observe(textured(32, 32, 3));
  CHECK_FALSE(v.triggered);
  CHECK(v.changed_fraction == 0.0);
}

TEST_CASE("full view switch after a static stretch triggers on that frame") {
  CameraMoveDetector det;
  Frame a = textured(64, 48, 4);
  Frame b = a;
  for (auto& p : b.pixels) p = static_cast<std::uint8_t>(255 - p);
  for (int i = 0; i < 100; ++i) CHECK_FALSE(det.observe(a).triggered);
  const auto v = det.observe(b);
  CHECK(v.triggered);
  CHECK(v.rolling_mean == 0.0);
  CHECK(det.history_size() == 0);
}

TEST_CASE("no trigger during warm-up, including right after a trigger") {
  MoveDetectorConfig cfg;
  CameraMoveDetector det(cfg);
  Frame a = Frame::filled(16, 16, 1, 0);
  Frame b = Frame::filled(16, 16, 1, 255);
  // Alternating full changes: the first warmup observations can never fire.
  det.observe(a);
  for (std::size_t i = 0; i < cfg.warmup; ++i) CHECK_FALSE(det.observe(i % 2 ? a : b).triggered);

  CameraMoveDetector d2(cfg);
  d2.observe(a);
  for (int i = 0; i < 20; ++i) d2.observe(a);
  CHECK(d2.observe(b).triggered);
  CHECK(d2.history_size() == 0);
  for (std::size_t i = 0; i < cfg.warmup; ++i) CHECK_FALSE(d2.observe(i % 2 ? b : a).triggered);
}

TEST_CASE("salted static scene does not trigger over 500 frames") {
  CameraMoveDetector det;
  Frame base = textured(120, 90, 5);
  double max_fraction = 0;
  double min_margin = 1;
  for (int i = 0; i < 500; ++i) {
    const auto v = det.observe(apply_salt_noise(base, 0.10, 1, 1000 + i));
    CHECK_FALSE(v.triggered);
    if (i > 0) {
      max_fraction = std::max(max_fraction, v.changed_fraction);
      if (det.history_size() >= 10) min_margin = std::min(min_margin, v.rolling_mean + 0.15 - v.changed_fraction);
    }
  }
  CHECK(max_fraction < 0.25);
  CHECK(min_margin > 0);
}

TEST_CASE("bounded stationary change process never triggers") {
  // Frames whose changed fraction stays within [0.05, 0.18]: mean + 0.15 is always above.
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> frac(0.05, 0.18);
  CameraMoveDetector det;
  Frame cur = Frame::filled(50, 50, 1, 100);
  det.observe(cur);
  for (int i = 0; i < 1000; ++i) {
    Frame next = cur;
    const int n = static_cast<int>(frac(rng) * 2500);
    std::vector<int> idx(2500);
    for (int k = 0; k < 2500; ++k) idx[k] = k;
    std::shuffle(idx.begin(), idx.end(), rng);
    for (int k = 0; k < n; ++k) next.pixels[idx[k]] = next.pixels[idx[k]] == 100 ? 160 : 100;
    const auto v = det.observe(next);
    REQUIRE(v.changed_fraction == doctest::Approx(n / 2500.0));
    REQUIRE_FALSE(v.triggered);
    cur = next;
  }
}

TEST_CASE("history is bounded by the window") {
  CameraMoveDetector det({100, 0.15, 10, 10});
  Frame a = Frame::filled(8, 8, 1, 50);
  for (int i = 0; i < 250; ++i) det.observe(a);
  CHECK(det.history_size() == 100);
}

TEST_CASE("pixel-less frames are ignored") {
  CameraMoveDetector det;
  Frame f;
  f.width = 100;
  f.height = 100;
  for (int i = 0; i < 20; ++i) CHECK_FALSE(det.observe(f).triggered);
  CHECK(det.history_size() == 0);
}
