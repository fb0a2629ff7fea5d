#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "farsec/detection.hpp"

namespace farsec {

enum class Direction { YIncreasing, YDecreasing, Unknown };

std::string_view to_string(Direction d);
Direction direction_from_string(std::string_view s);

struct Observation {
  std::int64_t frame_index = 0;
  double timestamp_s = 0.0;
  Point2 centroid;
  Box box;
  double confidence = 1.0;
};

struct Track {
  std::int64_t id = 0;
  std::vector<Observation> observations;
  Direction direction = Direction::Unknown;
  bool active = true;
  int misses = 0;

  const Observation& last() const { return observations.back(); }
};

struct CentroidLine {
  Point2 point;
  Point2 direction;  // unit length
  double fit_residual = 0.0;
};

struct TrackerConfig {
  double threshold_px = 50.0;
  int max_misses = 5;
  int min_frames = 5;
  double dir_deadband = 5.0;
};

struct Assignment {
  std::size_t track = 0;
  std::size_t detection = 0;
  double distance = 0.0;
};

/// Global greedy one-to-one matching: all (track, detection) pairs sorted by
/// ascending Euclidean distance, ties broken by track then detection index;
/// a pair is accepted if its distance is below `threshold` and both sides are
/// still free.
std::vector<Assignment> greedy_match(std::span<const Point2> tracks, std::span<const Point2> detections,
                                     double threshold);

/// Nearest-neighbour centroid tracker. One instance per calibration epoch.
class Tracker {
 public:
  explicit Tracker(TrackerConfig config = {}, std::int64_t first_id = 0);

  /// Advances to `frame_index` with that frame's detections. Returns the
  /// tracks retired by this step (more than max_misses consecutive misses).
  std::vector<Track> step(std::int64_t frame_index, double timestamp_s, const std::vector<Detection>& detections);

  /// Retires every remaining track.
  std::vector<Track> finish();

  const std::vector<Track>& active_tracks() const { return tracks_; }
  std::int64_t next_id() const { return next_id_; }
  const TrackerConfig& config() const { return config_; }

 private:
  TrackerConfig config_;
  std::vector<Track> tracks_;
  std::int64_t next_id_;
  std::int64_t last_frame_ = -1;
};

/// Meters per second that the tracker can follow: one lane width per frame.
double max_trackable_speed(double lane_width_m, double fps);

Direction assign_direction(const Track& track, double deadband = 5.0);

/// Total-least-squares line through the track centroids. Throws
/// DegenerateLine for fewer than two distinct centroids.
CentroidLine fit_centroid_line(const Track& track);
CentroidLine fit_centroid_line(std::span<const Point2> points);

/// The two points where the infinite line crosses the box boundary, ordered
/// along the line direction. Throws NoIntersection if the line misses the
/// box interior.
std::pair<Point2, Point2> box_line_intersections(const Box& box, const CentroidLine& line);

}  // namespace farsec
