#include "farsec/speed.hpp"

#include <algorithm>

#include "farsec/error.hpp"

namespace farsec {

VehicleSpeed vehicle_speed(const Track& track, const DepthField& depth, const CameraIntrinsics& k,
                           const ScaleCalibration& scale, double fps, std::size_t min_track_frames) {
  if (!(fps > 0.0)) throw Error(ErrorCode::InvalidParameter, "fps must be positive");
  if (track.observations.size() < std::max<std::size_t>(min_track_frames, 2))
    throw Error(ErrorCode::DegenerateTrack, "track too short");

  double path = 0.0;
  std::size_t used = 0;
  std::optional<Vec3> prev;
  std::int64_t first_frame = 0, last_frame = 0;
  for (const auto& obs : track.observations) {
    Vec3 p;
    try {
      p = lift_point(obs.centroid.u, obs.centroid.v, depth, k).to_cartesian();
    } catch (const Error&) {
      continue;
    }
    if (prev) {
      path += (p - *prev).norm();
    } else {
      first_frame = obs.frame_index;
    }
    last_frame = obs.frame_index;
    prev = p;
    ++used;
  }
  const double elapsed = static_cast<double>(last_frame - first_frame) / fps;
  if (used < 2 || !(elapsed > 0.0)) throw Error(ErrorCode::DegenerateTrack, "no elapsed time along track");

  VehicleSpeed out;
  out.track_id = track.id;
  out.v_kmh = scale.s_hat * path / elapsed * 3.6;
  out.t_last_seen = track.last().timestamp_s;
  out.direction = track.direction != Direction::Unknown ? track.direction : assign_direction(track);
  out.frames_used = used;
  out.epoch = scale.epoch;
  return out;
}

SpeedReport rolling_report(std::span<const VehicleSpeed> speeds, double t, double window_s, Direction direction) {
  SpeedReport r;
  r.t = t;
  r.direction = direction;
  r.window_s = window_s;
  double sum = 0.0;
  for (const auto& s : speeds) {
    if (s.direction != direction || direction == Direction::Unknown) continue;
    if (s.t_last_seen > t - window_s && s.t_last_seen <= t) {
      sum += s.v_kmh;
      ++r.vehicle_count;
    }
  }
  if (r.vehicle_count > 0) r.v_star_kmh = sum / static_cast<double>(r.vehicle_count);
  return r;
}

void SpeedWindow::add(const VehicleSpeed& speed) {
  if (speed.epoch != epoch_) throw Error(ErrorCode::InvalidParameter, "speed from a different calibration epoch");
  speeds_.push_back(speed);
}

SpeedReport SpeedWindow::report(double t, Direction direction) {
  std::erase_if(speeds_, [&](const VehicleSpeed& s) { return s.t_last_seen <= t - window_s_; });
  SpeedReport r = rolling_report(speeds_, t, window_s_, direction);
  r.epoch = epoch_;
  return r;
}

}  // namespace farsec
