#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

#include "farsec/farsec.h"
#include "support.hpp"

namespace fs = std::filesystem;

namespace {

const char* kScene =
    "duration_s=20\nroad.lanes=2\nroad.length_m=120\ndetect.min_visible_fraction=1\n"
    "flow.0.speed_kmh=50\nflow.0.lane=0\nflow.0.direction=away\nflow.0.interval_s=3\n"
    "flow.1.speed_kmh=90\nflow.1.lane=1\nflow.1.direction=toward\nflow.1.interval_s=3\nflow.1.start_s=1\n";

std::size_t count_files(const fs::path& dir) {
  std::size_t n = 0;
  for (const auto& e : fs::directory_iterator(dir)) n += e.is_regular_file();
  return n;
}

}  // namespace

TEST_CASE("status strings and version") {
  CHECK(std::strlen(farsec_version()) > 0);
  CHECK(std::string(farsec_status_string(FARSEC_OK)) == "ok");
  CHECK(std::strlen(farsec_status_string(FARSEC_CALIBRATION_FAILED)) > 0);
  CHECK(std::strlen(farsec_status_string(static_cast<farsec_status>(1234))) > 0);
}

TEST_CASE("config handle") {
  farsec_config* cfg = nullptr;
  REQUIRE(farsec_config_new(&cfg) == FARSEC_OK);
  char buf[64];
  REQUIRE(farsec_config_get(cfg, "track.threshold_px", buf, sizeof buf) == FARSEC_OK);
  CHECK(std::string(buf) == "50");
  CHECK(farsec_config_set(cfg, "track.threshold_px", "40") == FARSEC_OK);
  REQUIRE(farsec_config_get(cfg, "track.threshold_px", buf, sizeof buf) == FARSEC_OK);
  CHECK(std::string(buf) == "40");

  CHECK(farsec_config_set(cfg, "track.threshold", "40") == FARSEC_CONFIG_ERROR);
  CHECK(std::string(farsec_last_error()).find("track.threshold") != std::string::npos);
  CHECK(farsec_config_set(cfg, "track.max_misses", "x") == FARSEC_CONFIG_ERROR);
  CHECK(farsec_config_get(cfg, "detector", buf, 0) == FARSEC_INVALID_PARAMETER);
  CHECK(farsec_config_set(cfg, "detector", "trace:/a/very/long/path/that/does/not/fit/in/a/tiny/buffer") == FARSEC_OK);
  char tiny[8];
  CHECK(farsec_config_get(cfg, "detector", tiny, sizeof tiny) == FARSEC_INVALID_PARAMETER);
  CHECK(farsec_config_load_file(cfg, "/nonexistent/farsec.conf") == FARSEC_CONFIG_ERROR);

  test::TempDir dir("capi_cfg");
  std::ofstream(dir / "c.conf") << "speed.window_s=30\n";
  CHECK(farsec_config_load_file(cfg, (dir / "c.conf").c_str()) == FARSEC_OK);
  REQUIRE(farsec_config_get(cfg, "speed.window_s", buf, sizeof buf) == FARSEC_OK);
  CHECK(std::string(buf) == "30");
  farsec_config_free(cfg);
  farsec_config_free(nullptr);
  CHECK(farsec_config_new(nullptr) == FARSEC_INVALID_PARAMETER);
}

TEST_CASE("numeric entry points") {
  double v = 0;
  REQUIRE(farsec_max_trackable_speed(3.5, 15, &v) == FARSEC_OK);
  CHECK(v == doctest::Approx(52.5));
  CHECK(v * 3.6 == doctest::Approx(189.0));
  CHECK(farsec_max_trackable_speed(-1, 15, &v) == FARSEC_INVALID_PARAMETER);

  const double d[] = {1, 2}, l[] = {6, 6};
  double s = 0;
  REQUIRE(farsec_estimate_scale(d, l, 2, 2, &s) == FARSEC_OK);
  CHECK(s == doctest::Approx(3.6));
  CHECK(farsec_estimate_scale(d, l, 2, 20, &s) == FARSEC_INSUFFICIENT_EVIDENCE);
  const double bad[] = {0, 2};
  CHECK(farsec_estimate_scale(bad, l, 2, 1, &s) == FARSEC_INVALID_PAIR);
  CHECK(farsec_estimate_scale(nullptr, l, 2, 1, &s) == FARSEC_INVALID_PARAMETER);

  double t[31];
  for (int i = 0; i < 31; ++i) t[i] = i / 30.0;
  double fps = 0;
  REQUIRE(farsec_estimate_fps(t, 31, 120, &fps) == FARSEC_OK);
  CHECK(fps == doctest::Approx(30.0));
  CHECK(farsec_estimate_fps(t, 1, 120, &fps) == FARSEC_INSUFFICIENT_SAMPLES);
}

TEST_CASE("simulate, run and evaluate through the C API") {
  test::TempDir dir("capi_run");
  std::ofstream(dir / "scene.txt") << kScene;
  REQUIRE(farsec_sim_generate((dir / "scene.txt").c_str(), (dir / "sim").c_str(), 0, nullptr, 0) == FARSEC_OK);
  CHECK(fs::exists(dir / "sim" / "detections.trace"));
  CHECK(fs::exists(dir / "sim" / "depth.bin"));

  farsec_config* cfg = nullptr;
  REQUIRE(farsec_config_new(&cfg) == FARSEC_OK);
  REQUIRE(farsec_config_set(cfg, "detector", ("trace:" + (dir / "sim" / "detections.trace").string()).c_str()) ==
          FARSEC_OK);
  REQUIRE(farsec_config_set(cfg, "depth", ("file:" + (dir / "sim" / "depth.bin").string()).c_str()) == FARSEC_OK);
  REQUIRE(farsec_config_set(cfg, "out", (dir / "reports.jsonl").c_str()) == FARSEC_OK);
  farsec_run* run = nullptr;
  REQUIRE(farsec_run_pipeline(cfg, (dir / "log.jsonl").c_str(), &run) == FARSEC_OK);
  CHECK(farsec_run_frames(run) == 600);
  CHECK(farsec_run_epochs(run) == 1);
  CHECK(farsec_run_recalibration_count(run) == 0);
  REQUIRE(farsec_run_scale_count(run) == 1);
  double s_hat = 0;
  size_t pairs = 0;
  REQUIRE(farsec_run_scale(run, 0, &s_hat, &pairs) == FARSEC_OK);
  CHECK(s_hat == doctest::Approx(1.0).epsilon(0.1));
  CHECK(pairs >= 20);
  CHECK(farsec_run_scale(run, 5, &s_hat, &pairs) == FARSEC_INVALID_PARAMETER);
  REQUIRE(farsec_run_vehicle_count(run) > 5);
  farsec_vehicle veh;
  REQUIRE(farsec_run_vehicle(run, 0, &veh) == FARSEC_OK);
  CHECK(veh.direction == FARSEC_Y_DECREASING);
  CHECK(veh.v_kmh == doctest::Approx(50).epsilon(0.1));
  REQUIRE(farsec_run_report_count(run) > 0);
  farsec_report rep;
  REQUIRE(farsec_run_report(run, farsec_run_report_count(run) - 1, &rep) == FARSEC_OK);
  CHECK(rep.window_s == 60.0);
  CHECK(farsec_run_wall_time(run) > 0);
  farsec_run_free(run);
  CHECK(fs::file_size(dir / "reports.jsonl") > 0);
  CHECK(fs::file_size(dir / "log.jsonl") > 0);

  farsec_stats abs_total, rel_total;
  REQUIRE(farsec_evaluate((dir / "sim" / "ground_truth.csv").c_str(), (dir / "reports.jsonl").c_str(),
                          (dir / "eval").c_str(), 0, "sim", &abs_total, &rel_total) == FARSEC_OK);
  CHECK(abs_total.support > 0);
  CHECK(abs_total.mean < 9.0);
  CHECK(rel_total.mean < 10.0);
  CHECK(fs::exists(dir / "eval" / "per_video.csv"));

  REQUIRE(farsec_config_set(cfg, "detector", "trace:/nonexistent.trace") == FARSEC_OK);
  CHECK(farsec_run_pipeline(cfg, "", &run) == FARSEC_SOURCE_UNAVAILABLE);
  CHECK(run == nullptr);
  farsec_config_free(cfg);
}

TEST_CASE("augment an image sequence") {
  test::TempDir dir("capi_aug");
  std::ofstream(dir / "scene.txt") << "duration_s=0.2\nwidth=160\nheight=90\n";
  REQUIRE(farsec_sim_generate((dir / "scene.txt").c_str(), (dir / "sim").c_str(), 1, nullptr, 0) == FARSEC_OK);
  REQUIRE(count_files(dir / "sim" / "frames") == 6);
  REQUIRE(farsec_augment((dir / "sim" / "frames").c_str(), (dir / "aug").c_str(), 10, 0.1, 7) == FARSEC_OK);
  CHECK(count_files(dir / "aug") == 6);
  CHECK(farsec_augment((dir / "nothing").c_str(), (dir / "aug2").c_str(), 10, 0.1, 7) == FARSEC_SOURCE_UNAVAILABLE);
  CHECK(farsec_augment((dir / "sim" / "frames").c_str(), (dir / "aug3").c_str(), -1, 0.1, 7) ==
        FARSEC_INVALID_PARAMETER);
}
