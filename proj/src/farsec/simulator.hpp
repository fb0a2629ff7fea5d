#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "farsec/config.hpp"
#include "farsec/depth.hpp"
#include "farsec/detection.hpp"
#include "farsec/frame.hpp"
#include "farsec/tracking.hpp"

namespace farsec::sim {

enum class Heading { Away, Toward };

struct CarSpec {
  double length_m = 4.5;
  double width_m = 1.8;
  double height_m = 1.5;
  double speed_mps = 20.0;
  int lane = 0;
  double spawn_time_s = 0.0;
  Heading heading = Heading::Away;
};

/// Straight road along world +Y, camera above the road looking down +Y with a
/// downward pitch. World z is up.
struct SceneSpec {
  int width = 1280;
  int height = 720;
  double fps = 30.0;
  double duration_s = 10.0;
  std::uint64_t seed = 1;
  double true_scale = 1.0;  // meters per emitted depth unit

  double fov_deg = 60.0;
  double camera_height_m = 15.0;
  double camera_pitch_deg = 50.0;
  double camera_lateral_m = 0.0;

  int lanes = 2;
  double lane_width_m = 3.5;
  double road_start_m = 0.0;
  double road_length_m = 250.0;

  double box_noise_px = 0.0;
  double confidence = 0.9;
  double depth_max_m = 1000.0;
  double tile_m = 4.0;
  /// Boxes whose visible part is below this fraction of the full projected
  /// box are not emitted.
  double min_visible_fraction = 0.5;

  std::vector<CarSpec> cars;

  std::int64_t frame_count() const;
  double lane_center(int lane) const;
  void validate() const;
};

/// Reads a flat key-value scene description; cars come from repeated
/// `car.N.*` groups or periodic `flow.N.*` groups.
SceneSpec parse_scene(const KeyValues& kv);
SceneSpec read_scene(const std::filesystem::path& path);

struct CarTruth {
  std::int64_t car_id = 0;
  double speed_kmh = 0.0;
  Direction direction = Direction::Unknown;
  std::int64_t first_frame = -1;  // -1: never visible
  std::int64_t last_frame = -1;
};

struct GroundTruth {
  std::vector<CarTruth> cars;
  double true_scale = 1.0;
};

void write_ground_truth(const GroundTruth& gt, const std::filesystem::path& path);
GroundTruth read_ground_truth(const std::filesystem::path& path);

struct Scene {
  SceneSpec spec;
  DetectionTrace trace;
  DepthField depth;
  GroundTruth truth;
};

/// Projects every car per frame into an axis-aligned box and renders the
/// empty-road depth field. Deterministic in spec.seed.
Scene generate(const SceneSpec& spec);

/// Pinhole projection with the scene's intrinsics and pose.
class SceneCamera {
 public:
  explicit SceneCamera(const SceneSpec& spec);
  /// Camera-frame coordinates (x right, y down, z forward).
  Vec3 to_camera(const Vec3& world) const;
  Point2 project(const Vec3& world) const;
  /// Ground-plane hit of the pixel ray, if the ray points below the horizon.
  std::optional<Vec3> ground_hit(double u, double v) const;
  const CameraIntrinsics& intrinsics() const { return k_; }

 private:
  CameraIntrinsics k_;
  Vec3 center_, right_, down_, forward_;
};

/// Road-axis extent and lateral centre of a car at time t; nullopt before
/// spawn or once any part of it leaves the road segment.
struct CarPose {
  double y_min = 0.0;
  double y_max = 0.0;
  double x_center = 0.0;
};
std::optional<CarPose> car_pose(const SceneSpec& spec, const CarSpec& car, double t);

/// Flat-shaded grayscale rendering: two-level ground checkerboard with cars
/// filled at the bright level.
class Renderer {
 public:
  explicit Renderer(const Scene& scene);
  Frame render(std::int64_t frame_index) const;

 private:
  Frame background_;
  double fps_ = 30.0;
  std::vector<std::vector<Box>> boxes_;  // per frame
};

/// Frames before `switch_frame` come from `a`, the rest from `b`.
struct CompositeScene {
  Scene a;
  Scene b;
  std::int64_t switch_frame = 0;
  DetectionTrace trace;
  GroundTruth truth;

  Frame render(std::int64_t frame_index) const;
  std::int64_t frame_count() const { return a.spec.frame_count(); }

 private:
  friend CompositeScene inject_view_switch(Scene a, Scene b, std::int64_t switch_frame);
  std::shared_ptr<Renderer> renderer_a_;
  std::shared_ptr<Renderer> renderer_b_;
};

CompositeScene inject_view_switch(Scene a, Scene b, std::int64_t switch_frame);

/// Writes detections.trace, depth.bin, ground_truth.csv, scene_info.txt and,
/// with `frames`, frames/frame_NNNNNN.png.
void write_scene(const Scene& scene, const std::filesystem::path& dir, bool frames);
/// Same layout; depth goes to depth/depth_NNNNNN.bin (one file per view).
void write_composite(const CompositeScene& scene, const std::filesystem::path& dir, bool frames);

}  // namespace farsec::sim
