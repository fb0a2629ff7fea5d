#include "farsec/tracking.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "farsec/error.hpp"

namespace farsec {

std::string_view to_string(Direction d) {
  switch (d) {
    case Direction::YIncreasing: return "y_increasing";
    case Direction::YDecreasing: return "y_decreasing";
    case Direction::Unknown: return "unknown";
  }
  return "unknown";
}

Direction direction_from_string(std::string_view s) {
  if (s == "y_increasing") return Direction::YIncreasing;
  if (s == "y_decreasing") return Direction::YDecreasing;
  if (s == "unknown") return Direction::Unknown;
  throw Error(ErrorCode::InvalidParameter, "unknown direction '" + std::string(s) + "'");
}

std::vector<Assignment> greedy_match(std::span<const Point2> tracks, std::span<const Point2> detections,
                                     double threshold) {
  std::vector<Assignment> candidates;
  candidates.reserve(tracks.size() * detections.size());
  for (std::size_t t = 0; t < tracks.size(); ++t) {
    for (std::size_t d = 0; d < detections.size(); ++d) {
      const double dist = std::hypot(tracks[t].u - detections[d].u, tracks[t].v - detections[d].v);
      if (dist < threshold) candidates.push_back({t, d, dist});
    }
  }
  std::sort(candidates.begin(), candidates.end(), [](const Assignment& a, const Assignment& b) {
    if (a.distance != b.distance) return a.distance < b.distance;
    if (a.track != b.track) return a.track < b.track;
    return a.detection < b.detection;
  });
  std::vector<bool> track_used(tracks.size(), false);
  std::vector<bool> det_used(detections.size(), false);
  std::vector<Assignment> out;
  for (const auto& c : candidates) {
    if (track_used[c.track] || det_used[c.detection]) continue;
    track_used[c.track] = det_used[c.detection] = true;
    out.push_back(c);
  }
  return out;
}

Tracker::Tracker(TrackerConfig config, std::int64_t first_id) : config_(config), next_id_(first_id) {
  if (!(config_.threshold_px > 0.0)) throw Error(ErrorCode::InvalidParameter, "track.threshold_px must be positive");
  if (config_.max_misses < 0) throw Error(ErrorCode::InvalidParameter, "track.max_misses must be non-negative");
}

std::vector<Track> Tracker::step(std::int64_t frame_index, double timestamp_s,
                                 const std::vector<Detection>& detections) {
  if (frame_index <= last_frame_)
    throw Error(ErrorCode::InvalidParameter, "tracker frames must be strictly increasing");
  last_frame_ = frame_index;

  std::vector<Point2> track_points;
  track_points.reserve(tracks_.size());
  for (const auto& t : tracks_) track_points.push_back(t.last().centroid);
  std::vector<Point2> det_points;
  det_points.reserve(detections.size());
  for (const auto& d : detections) det_points.push_back(d.box.center());

  const auto matches = greedy_match(track_points, det_points, config_.threshold_px);
  std::vector<bool> track_matched(tracks_.size(), false);
  std::vector<bool> det_matched(detections.size(), false);
  for (const auto& m : matches) {
    auto& track = tracks_[m.track];
    track.observations.push_back({frame_index, timestamp_s, det_points[m.detection], detections[m.detection].box,
                                  detections[m.detection].confidence});
    track.misses = 0;
    track_matched[m.track] = det_matched[m.detection] = true;
  }

  std::vector<Track> retired;
  std::vector<Track> kept;
  kept.reserve(tracks_.size() + detections.size());
  for (std::size_t i = 0; i < tracks_.size(); ++i) {
    auto& track = tracks_[i];
    if (!track_matched[i] && ++track.misses > config_.max_misses) {
      track.active = false;
      track.direction = assign_direction(track, config_.dir_deadband);
      retired.push_back(std::move(track));
    } else {
      kept.push_back(std::move(track));
    }
  }
  for (std::size_t d = 0; d < detections.size(); ++d) {
    if (det_matched[d]) continue;
    Track t;
    t.id = next_id_++;
    t.observations.push_back({frame_index, timestamp_s, det_points[d], detections[d].box, detections[d].confidence});
    kept.push_back(std::move(t));
  }
  tracks_ = std::move(kept);
  return retired;
}

std::vector<Track> Tracker::finish() {
  std::vector<Track> retired = std::move(tracks_);
  tracks_.clear();
  for (auto& t : retired) {
    t.active = false;
    t.direction = assign_direction(t, config_.dir_deadband);
  }
  return retired;
}

double max_trackable_speed(double lane_width_m, double fps) {
  if (!(lane_width_m > 0.0) || !(fps > 0.0))
    throw Error(ErrorCode::InvalidParameter, "lane width and fps must be positive");
  return lane_width_m * fps;
}

Direction assign_direction(const Track& track, double deadband) {
  if (track.observations.size() < 2) return Direction::Unknown;
  const double dv = track.observations.back().centroid.v - track.observations.front().centroid.v;
  if (dv > deadband) return Direction::YIncreasing;
  if (dv < -deadband) return Direction::YDecreasing;
  return Direction::Unknown;
}

CentroidLine fit_centroid_line(std::span<const Point2> points) {
  if (points.size() < 2) throw Error(ErrorCode::DegenerateLine, "need at least two centroids");
  const double n = static_cast<double>(points.size());
  double mu = 0.0, mv = 0.0;
  for (const auto& p : points) {
    mu += p.u;
    mv += p.v;
  }
  mu /= n;
  mv /= n;
  double suu = 0.0, svv = 0.0, suv = 0.0;
  for (const auto& p : points) {
    const double du = p.u - mu, dv = p.v - mv;
    suu += du * du;
    svv += dv * dv;
    suv += du * dv;
  }
  suu /= n;
  svv /= n;
  suv /= n;
  if (suu + svv <= 1e-18) throw Error(ErrorCode::DegenerateLine, "all centroids coincide");

  // Principal axis of the 2x2 scatter matrix.
  const double angle = 0.5 * std::atan2(2.0 * suv, suu - svv);
  Point2 dir{std::cos(angle), std::sin(angle)};
  const double du = points.back().u - points.front().u;
  const double dv = points.back().v - points.front().v;
  if (dir.u * du + dir.v * dv < 0.0) dir = {-dir.u, -dir.v};

  double sq = 0.0;
  for (const auto& p : points) {
    const double off = -(p.u - mu) * dir.v + (p.v - mv) * dir.u;
    sq += off * off;
  }
  return {{mu, mv}, dir, std::sqrt(sq / n)};
}

CentroidLine fit_centroid_line(const Track& track) {
  std::vector<Point2> pts;
  pts.reserve(track.observations.size());
  for (const auto& o : track.observations) pts.push_back(o.centroid);
  return fit_centroid_line(pts);
}

std::pair<Point2, Point2> box_line_intersections(const Box& box, const CentroidLine& line) {
  // Liang-Barsky clipping of the infinite line p + t*d against both slabs.
  double t_lo = -std::numeric_limits<double>::infinity();
  double t_hi = std::numeric_limits<double>::infinity();
  int lo_axis = -1, hi_axis = -1;
  double lo_value = 0.0, hi_value = 0.0;

  auto clip = [&](int axis, double p, double d, double min, double max) {
    if (std::abs(d) < 1e-15) {
      if (p <= min || p >= max) throw Error(ErrorCode::NoIntersection, "line parallel to and outside box");
      return;
    }
    double t1 = (min - p) / d, t2 = (max - p) / d;
    double v1 = min, v2 = max;
    if (t1 > t2) {
      std::swap(t1, t2);
      std::swap(v1, v2);
    }
    if (t1 > t_lo) {
      t_lo = t1;
      lo_axis = axis;
      lo_value = v1;
    }
    if (t2 < t_hi) {
      t_hi = t2;
      hi_axis = axis;
      hi_value = v2;
    }
  };
  clip(0, line.point.u, line.direction.u, box.x_min, box.x_max);
  clip(1, line.point.v, line.direction.v, box.y_min, box.y_max);

  const double extent = std::max(box.x_max - box.x_min, box.y_max - box.y_min);
  if (!(t_hi - t_lo > 1e-12 * std::max(1.0, extent)))
    throw Error(ErrorCode::NoIntersection, "line misses box interior");

  auto at = [&](double t, int axis, double value) {
    Point2 p{line.point.u + t * line.direction.u, line.point.v + t * line.direction.v};
    if (axis == 0) p.u = value;
    if (axis == 1) p.v = value;
    return p;
  };
  return {at(t_lo, lo_axis, lo_value), at(t_hi, hi_axis, hi_value)};
}

}  // namespace farsec
