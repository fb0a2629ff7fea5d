#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "farsec/depth.hpp"
#include "farsec/scale.hpp"
#include "farsec/tracking.hpp"

namespace farsec {

struct VehicleSpeed {
  std::int64_t track_id = 0;
  double v_kmh = 0.0;
  double t_last_seen = 0.0;
  Direction direction = Direction::Unknown;
  std::size_t frames_used = 0;
  std::int64_t epoch = 0;
};

struct SpeedReport {
  double t = 0.0;
  Direction direction = Direction::Unknown;
  std::optional<double> v_star_kmh;
  std::size_t vehicle_count = 0;
  double window_s = 60.0;
  std::int64_t epoch = 0;
};

/// Average speed over the track: scaled path length through the lifted
/// centroids divided by the frame span / fps. Observations whose centroid
/// cannot be lifted are skipped. Throws DegenerateTrack for tracks shorter
/// than `min_track_frames` or with zero elapsed time.
VehicleSpeed vehicle_speed(const Track& track, const DepthField& depth, const CameraIntrinsics& k,
                           const ScaleCalibration& scale, double fps, std::size_t min_track_frames = 5);

/// Mean speed of `direction` vehicles last seen in (t - window_s, t].
SpeedReport rolling_report(std::span<const VehicleSpeed> speeds, double t, double window_s, Direction direction);

/// Sliding window of per-vehicle speeds for one calibration epoch.
class SpeedWindow {
 public:
  explicit SpeedWindow(double window_s = 60.0, std::int64_t epoch = 0) : window_s_(window_s), epoch_(epoch) {}

  void add(const VehicleSpeed& speed);
  SpeedReport report(double t, Direction direction);
  std::size_t size() const { return speeds_.size(); }
  double window_s() const { return window_s_; }
  std::int64_t epoch() const { return epoch_; }

 private:
  double window_s_;
  std::int64_t epoch_;
  std::vector<VehicleSpeed> speeds_;
};

}  // namespace farsec
