#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "farsec/speed.hpp"
#include "farsec/tracking.hpp"

namespace farsec::eval {

struct TruthSpeed {
  std::string video_id;
  std::string vehicle_id;
  double v_true_kmh = 0.0;
  Direction direction = Direction::Unknown;
  std::int64_t first_frame = -1;
  std::int64_t last_frame = -1;
};

struct PredictedSpeed {
  std::string video_id;
  std::string vehicle_id;
  double v_pred_kmh = 0.0;
};

struct ErrorRecord {
  std::string vehicle_id;
  double abs_err = 0.0;  // km/h
  double rel_err = 0.0;  // percent of the true speed
  std::string video_id;
};

struct ErrorSet {
  std::vector<ErrorRecord> records;
  std::vector<TruthSpeed> uncovered;
};

/// abs = |v_pred - v_true|, rel = 100 * abs / v_true. Ground-truth vehicles
/// without a prediction are returned as uncovered. Throws UnknownVehicle for
/// a prediction whose (video, id) is not in the ground truth.
ErrorSet per_vehicle_errors(std::span<const TruthSpeed> truth, std::span<const PredictedSpeed> predictions);

struct Stats {
  std::size_t support = 0;
  double mean = 0.0;
  double median = 0.0;  // lower median
  double p95 = 0.0;     // nearest rank, ceil(0.95 n)
  double worst = 0.0;
};

/// Throws EmptyEvaluation for an empty sample.
Stats summarize(std::span<const double> values);

struct VideoStats {
  std::string video_id;
  Stats abs;
  Stats rel;
};

struct EvaluationTable {
  std::vector<VideoStats> per_video;  // in order of first appearance
  VideoStats total;                   // pooled over all records
};

EvaluationTable aggregate(std::span<const ErrorRecord> records);

struct HistogramBin {
  double upper = 0.0;
  std::size_t cumulative_count = 0;
};

/// Cumulative counts of values <= k * bin_width for k = 1..ceil(max / width).
std::vector<HistogramBin> cumulative_histogram(std::span<const double> values, double bin_width = 1.0);

/// Per-vehicle prediction from the windowed output: the direction's v_star
/// in the first report at or after the vehicle's last sighting, else the
/// latest earlier report.
std::vector<PredictedSpeed> predictions_from_reports(std::span<const TruthSpeed> truth,
                                                     std::span<const SpeedReport> reports, double fps);

std::vector<TruthSpeed> read_truth_csv(const std::filesystem::path& path, const std::string& default_video);
/// Reads either per-vehicle predictions (`[video,]car_id,speed_kmh`) or a
/// pipeline report stream (JSON lines or CSV with v_star_kmh).
struct PredictionInput {
  std::vector<PredictedSpeed> per_vehicle;
  std::vector<SpeedReport> reports;
  bool is_report_stream = false;
};
PredictionInput read_predictions(const std::filesystem::path& path, const std::string& default_video);

struct EvaluationResult {
  ErrorSet errors;
  EvaluationTable table;
};

/// Full harness: writes per_video.csv, total.csv, cumulative.csv (plus the
/// relative-error table per_video_rel.csv and uncovered.csv) into out_dir.
EvaluationResult run_evaluation(const std::filesystem::path& gt_path, const std::filesystem::path& pred_path,
                                const std::filesystem::path& out_dir, std::optional<double> fps,
                                const std::string& default_video = "video");

void write_tables(const EvaluationResult& result, const std::filesystem::path& out_dir);

}  // namespace farsec::eval
