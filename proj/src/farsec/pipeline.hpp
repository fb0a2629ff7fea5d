#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <vector>

#include "farsec/config.hpp"
#include "farsec/depth.hpp"
#include "farsec/detection.hpp"
#include "farsec/frame.hpp"
#include "farsec/scale.hpp"
#include "farsec/speed.hpp"

namespace farsec {

struct RecalibrationEvent {
  std::int64_t frame_index = 0;
  double changed_fraction = 0.0;
};

struct RunSummary {
  std::int64_t frames = 0;
  std::int64_t detections = 0;
  std::int64_t epochs = 0;
  std::vector<RecalibrationEvent> recalibrations;
  std::vector<ScaleCalibration> scales;
  std::vector<VehicleSpeed> speeds;
  std::vector<SpeedReport> reports;
  double wall_time_s = 0.0;
};

/// Where the pipeline writes. Reports go to `reports` as JSON lines or CSV;
/// structured log records go to `log` as JSON lines. Either may be null.
struct PipelineSinks {
  std::ostream* reports = nullptr;
  std::ostream* log = nullptr;
};

struct PipelineBackends {
  std::unique_ptr<FrameSource> source;
  std::unique_ptr<DetectorBackend> detector;
  std::unique_ptr<DepthBackend> depth;
};

/// Builds the source and backends named in the configuration. Throws
/// ConfigError, SourceUnavailable or UnsupportedFormat.
PipelineBackends make_backends(const PipelineConfig& config);

/// Streams every frame through move detection, detection, tracking and
/// per-epoch calibration (fps, depth, scale), emitting rolling speed reports.
/// A camera move closes the epoch: in-flight tracks and the speed window are
/// dropped and calibration starts over. Throws CalibrationFailed when the
/// depth backend fails.
RunSummary run_pipeline(const PipelineConfig& config, PipelineBackends backends, const PipelineSinks& sinks);
RunSummary run_pipeline(const PipelineConfig& config, const PipelineSinks& sinks);

}  // namespace farsec
