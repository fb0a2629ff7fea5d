#include <doctest.h>

#include <random>
#include <vector>

#include "farsec/error.hpp"
#include "farsec/fps.hpp"

using namespace farsec;

namespace {

std::vector<double> even(int n, double fps) {
  std::vector<double> t(n);
  for (int i = 0; i < n; ++i) t[i] = i / fps;
  return t;
}

}  // namespace

TEST_CASE("even pacing") {
  const auto t = even(31, 30.0);
  const auto e = estimate_fps(t);
  CHECK(e.fps == doctest::Approx(30.0).epsilon(1e-12));
  CHECK(e.sample_count == 31);
  CHECK(e.source == FpsSource::Measured);
}

TEST_CASE("jittered 25 fps stays within the derived bound") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> jitter(-0.002, 0.002);
  for (int trial = 0; trial < 200; ++trial) {
    auto t = even(121, 25.0);
    for (auto& x : t) x += jitter(rng);
    const auto e = estimate_fps(t, 120);
    // Oracle: endpoint formula over the first 120 samples.
    const double oracle = 119.0 / (t[119] - t[0]);
    CHECK(e.fps == doctest::Approx(oracle).epsilon(1e-12));
    CHECK(e.sample_count == 120);
    CHECK(e.fps >= 24.5);
    CHECK(e.fps <= 25.5);
    CHECK(std::abs(e.fps - 25.0) <= 2 * 0.002 * 25.0 * 25.0 / 119.0 + 1e-9);
  }
}

TEST_CASE("interior jitter cancels") {
  auto t = even(60, 30.0);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> jitter(-0.01, 0.01);
  for (std::size_t i = 1; i + 1 < t.size(); ++i) t[i] += jitter(rng);
  CHECK(estimate_fps(t).fps == doctest::Approx(30.0).epsilon(1e-12));
}

TEST_CASE("interleaving midpoints doubles the estimate over the same span") {
  const auto coarse = even(20, 10.0);
  const auto fine = even(39, 20.0);  // same span, every other sample interleaved
  CHECK(estimate_fps(fine).fps == doctest::Approx(2 * estimate_fps(coarse).fps));
}

TEST_CASE("errors") {
  std::vector<double> one{0.0};
  try {
    estimate_fps(one);
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InsufficientSamples);
  }
  std::vector<double> back{0.0, 0.1, 0.1};
  try {
    estimate_fps(back);
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InvalidTimestamps);
  }
}

TEST_CASE("declared fps is used verbatim") {
  const auto e = resolve_fps(29.97, {}, 120);
  CHECK(e.fps == 29.97);
  CHECK(e.source == FpsSource::Metadata);
  const auto m = resolve_fps(std::nullopt, even(10, 15.0), 120);
  CHECK(m.source == FpsSource::Measured);
  CHECK(m.fps == doctest::Approx(15.0));
}
