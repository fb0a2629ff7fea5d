#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace farsec {

/// Parsed `key=value` lines in file order. Blank lines and `#` comments are
/// skipped. Throws ConfigError on lines without '='.
using KeyValues = std::vector<std::pair<std::string, std::string>>;
KeyValues parse_key_values(const std::string& text, const std::string& origin = "config");
KeyValues read_key_values(const std::filesystem::path& path);

enum class OutputFormat { Jsonl, Csv };

struct PipelineConfig {
  std::string source;
  std::string detector;  // "trace:<path>" or "external"
  std::string depth;     // "file:<path>" or "external"
  std::string out;       // empty: stdout
  OutputFormat format = OutputFormat::Jsonl;
  std::string dump_tracks;

  double ingest_max_fps = 30.0;
  int ingest_max_width = 1920;
  int ingest_max_height = 1080;
  double ingest_fps = 0.0;  // declared source fps; 0 = unknown
  int ingest_blur = 0;      // 0 = off
  double ingest_noise = 0.0;
  std::uint64_t ingest_seed = 0;
  int ingest_channel_capacity = 64;

  bool move_enabled = true;
  int move_window = 100;
  double move_offset = 0.15;
  int move_pixel_delta = 10;
  int move_warmup = 10;

  double detect_min_confidence = 0.25;

  double track_threshold_px = 50.0;
  int track_max_misses = 5;
  int track_min_frames = 5;
  double track_dir_deadband = 5.0;
  double track_lane_width_m = 3.5;
  double track_expected_max_kmh = 0.0;  // 0 = no expectation

  int fps_samples = 120;

  int depth_calib_frames = 10;
  int depth_stride = 3;
  double camera_fov_deg = 60.0;

  int scale_min_pairs = 20;
  double scale_car_length_m = 6.0;

  double speed_window_s = 60.0;
  double speed_report_interval = 1.0;

  /// Applies one key. Throws ConfigError for unknown keys or bad values.
  void set(const std::string& key, const std::string& value);
  /// Throws ConfigError if a numeric key is out of range.
  void validate() const;
  /// Effective configuration as `key=value` pairs in a stable order.
  KeyValues entries() const;
};

/// Defaults, then the file (if any), then the CLI overrides.
PipelineConfig load_config(const std::optional<std::filesystem::path>& path, const KeyValues& overrides = {});

}  // namespace farsec
