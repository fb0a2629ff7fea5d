#include <doctest.h>

#include <fstream>
#include <optional>

#include "farsec/config.hpp"
#include "farsec/error.hpp"
#include "support.hpp"

using namespace farsec;

TEST_CASE("empty file gives defaults") {
  test::TempDir dir("cfg");
  std::ofstream(dir / "empty.conf") << "";
  const auto c = load_config(dir / "empty.conf");
  const PipelineConfig d;
  CHECK(c.entries() == d.entries());
  CHECK(c.track_threshold_px == 50.0);
  CHECK(c.speed_window_s == 60.0);
  CHECK(c.fps_samples == 120);
  CHECK(c.move_offset == 0.15);
}

TEST_CASE("command line overrides the file") {
  test::TempDir dir("cfg");
  std::ofstream(dir / "a.conf") << "# comment\n\ntrack.threshold_px = 80\nspeed.window_s=30\nformat=csv\n";
  const auto file_only = load_config(dir / "a.conf");
  CHECK(file_only.track_threshold_px == 80.0);
  CHECK(file_only.format == OutputFormat::Csv);
  const auto both = load_config(dir / "a.conf", {{"track.threshold_px", "40"}});
  CHECK(both.track_threshold_px == 40.0);
  CHECK(both.speed_window_s == 30.0);
  CHECK(load_config(std::nullopt, {{"ingest.seed", "9"}}).ingest_seed == 9);
}

TEST_CASE("bad keys and values") {
  auto code_of = [](auto&& fn) -> std::optional<ErrorCode> {
    try {
      fn();
    } catch (const Error& e) {
      return e.code();
    }
    return std::nullopt;
  };
  PipelineConfig c;
  try {
    c.set("track.threshold", "50");
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ConfigError);
    CHECK(std::string(e.what()).find("unknown key") != std::string::npos);
    CHECK(std::string(e.what()).find("track.threshold") != std::string::npos);
  }
  CHECK(code_of([&] { c.set("track.max_misses", "five"); }) == ErrorCode::ConfigError);
  CHECK(code_of([&] { c.set("track.max_misses", "5.5"); }) == ErrorCode::ConfigError);
  CHECK(code_of([&] { c.set("move.enabled", "maybe"); }) == ErrorCode::ConfigError);
  CHECK(code_of([&] { c.set("format", "xml"); }) == ErrorCode::ConfigError);
  CHECK(code_of([] { load_config(std::nullopt, {{"ingest.noise", "1.5"}}); }) == ErrorCode::ConfigError);
  CHECK(code_of([] { load_config(std::nullopt, {{"speed.window_s", "0"}}); }) == ErrorCode::ConfigError);
  CHECK(code_of([] { load_config("/nonexistent/farsec.conf"); }) == ErrorCode::ConfigError);
  CHECK(code_of([] { parse_key_values("a=1\nnot a pair\n"); }) == ErrorCode::ConfigError);
}

TEST_CASE("entries round trip through set") {
  PipelineConfig c;
  c.set("camera.fov_deg", "72.5");
  c.set("move.enabled", "false");
  c.set("detector", "trace:/tmp/x.trace");
  PipelineConfig d;
  for (const auto& [k, v] : c.entries()) d.set(k, v);
  CHECK(d.entries() == c.entries());
  CHECK(d.camera_fov_deg == 72.5);
  CHECK_FALSE(d.move_enabled);
}
