#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "farsec/frame.hpp"

namespace farsec {

struct Point2 {
  double u = 0.0;
  double v = 0.0;
  friend bool operator==(const Point2&, const Point2&) = default;
};

struct Box {
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 0.0;
  double y_max = 0.0;

  Point2 center() const { return {(x_min + x_max) / 2.0, (y_min + y_max) / 2.0}; }
  bool valid() const { return x_min < x_max && y_min < y_max; }
  friend bool operator==(const Box&, const Box&) = default;
};

struct Detection {
  std::int64_t frame_index = 0;
  Box box;
  std::string class_label;
  double confidence = 0.0;
  friend bool operator==(const Detection&, const Detection&) = default;
};

struct TraceHeader {
  std::optional<double> fps;
  int width = 0;
  int height = 0;
  friend bool operator==(const TraceHeader&, const TraceHeader&) = default;
};

/// Line-delimited detection records:
///   #farsec-trace v1 fps=<float> width=<int> height=<int>
///   frame_index x_min y_min x_max y_max class confidence
struct DetectionTrace {
  TraceHeader header;
  std::vector<Detection> detections;
  friend bool operator==(const DetectionTrace&, const DetectionTrace&) = default;
};

DetectionTrace read_trace(const std::filesystem::path& path);
void write_trace(const DetectionTrace& trace, const std::filesystem::path& path);

std::string format_number(double value);

class DetectorBackend {
 public:
  virtual ~DetectorBackend() = default;
  virtual std::string name() const = 0;
  virtual std::vector<Detection> detect(const Frame& frame) = 0;
};

/// Replays a recorded trace. Detections below `min_confidence` are dropped
/// when the trace is loaded; boxes are rescaled when the frame size differs
/// from the size recorded in the trace header.
class TraceDetector : public DetectorBackend {
 public:
  explicit TraceDetector(const DetectionTrace& trace, double min_confidence = 0.25);

  std::string name() const override { return "trace"; }
  std::vector<Detection> detect(const Frame& frame) override;

  const TraceHeader& header() const { return header_; }
  /// One past the largest recorded frame index.
  std::int64_t frame_count() const { return frame_count_; }

 private:
  TraceHeader header_;
  std::map<std::int64_t, std::vector<Detection>> by_frame_;
  std::int64_t frame_count_ = 0;
};

std::vector<Detection> filter_cars(const std::vector<Detection>& detections);

}  // namespace farsec
