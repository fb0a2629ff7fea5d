#include "farsec/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <iomanip>
#include <map>
#include <numbers>
#include <random>
#include <sstream>

#include "farsec/error.hpp"

namespace farsec::sim {

namespace fs = std::filesystem;

namespace {

constexpr double kNearPlane = 0.5;
constexpr std::uint8_t kDark = 60;
constexpr std::uint8_t kBright = 190;

std::string padded(std::int64_t n) {
  std::ostringstream ss;
  ss << std::setw(6) << std::setfill('0') << n;
  return ss.str();
}

double to_double(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorCode::ConfigError, "type mismatch for scene key '" + key + "': '" + value + "'");
  }
}

Heading to_heading(const std::string& key, const std::string& value) {
  if (value == "away") return Heading::Away;
  if (value == "toward") return Heading::Toward;
  throw Error(ErrorCode::ConfigError, "scene key '" + key + "' must be away or toward");
}

}  // namespace

std::int64_t SceneSpec::frame_count() const { return static_cast<std::int64_t>(std::llround(duration_s * fps)); }

double SceneSpec::lane_center(int lane) const { return (lane - (lanes - 1) / 2.0) * lane_width_m; }

void SceneSpec::validate() const {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw Error(ErrorCode::InvalidParameter, "scene: " + what);
  };
  require(width > 0 && height > 0, "image size must be positive");
  require(fps > 0, "fps must be positive");
  require(duration_s >= 0, "duration must be non-negative");
  require(true_scale > 0, "true_scale must be positive");
  require(fov_deg > 0 && fov_deg < 180, "fov must lie in (0, 180)");
  require(camera_height_m > 0, "camera height must be positive");
  require(lanes > 0, "need at least one lane");
  require(lane_width_m > 0, "lane width must be positive");
  require(road_length_m > 0, "road length must be positive");
  require(box_noise_px >= 0, "box noise must be non-negative");
  for (std::size_t i = 0; i < cars.size(); ++i) {
    const auto& c = cars[i];
    const std::string id = "car " + std::to_string(i) + ": ";
    require(c.speed_mps >= 0, id + "speed must be non-negative");
    require(c.length_m > 0 && c.width_m > 0 && c.height_m > 0, id + "dimensions must be positive");
    require(c.lane >= 0 && c.lane < lanes, id + "lane out of range");
  }
}

SceneSpec parse_scene(const KeyValues& kv) {
  SceneSpec spec;
  std::map<int, std::map<std::string, std::string>> car_groups;
  std::map<int, std::map<std::string, std::string>> flow_groups;
  for (const auto& [key, value] : kv) {
    auto group = [&](const std::string& prefix, auto& groups) {
      if (key.rfind(prefix, 0) != 0) return false;
      const auto rest = key.substr(prefix.size());
      const auto dot = rest.find('.');
      if (dot == std::string::npos) throw Error(ErrorCode::ConfigError, "malformed scene key '" + key + "'");
      int n = 0;
      try {
        n = std::stoi(rest.substr(0, dot));
      } catch (const std::exception&) {
        throw Error(ErrorCode::ConfigError, "malformed scene key '" + key + "'");
      }
      groups[n][rest.substr(dot + 1)] = value;
      return true;
    };
    if (group("car.", car_groups) || group("flow.", flow_groups)) continue;

    const double v = (key == "seed") ? 0.0 : to_double(key, value);
    if (key == "width") spec.width = static_cast<int>(v);
    else if (key == "height") spec.height = static_cast<int>(v);
    else if (key == "fps") spec.fps = v;
    else if (key == "duration_s") spec.duration_s = v;
    else if (key == "seed") spec.seed = std::stoull(value);
    else if (key == "true_scale") spec.true_scale = v;
    else if (key == "camera.fov_deg") spec.fov_deg = v;
    else if (key == "camera.height_m") spec.camera_height_m = v;
    else if (key == "camera.pitch_deg") spec.camera_pitch_deg = v;
    else if (key == "camera.lateral_m") spec.camera_lateral_m = v;
    else if (key == "road.lanes") spec.lanes = static_cast<int>(v);
    else if (key == "road.lane_width_m") spec.lane_width_m = v;
    else if (key == "road.start_m") spec.road_start_m = v;
    else if (key == "road.length_m") spec.road_length_m = v;
    else if (key == "noise.box_px") spec.box_noise_px = v;
    else if (key == "detect.confidence") spec.confidence = v;
    else if (key == "depth.max_m") spec.depth_max_m = v;
    else if (key == "render.tile_m") spec.tile_m = v;
    else if (key == "detect.min_visible_fraction") spec.min_visible_fraction = v;
    else throw Error(ErrorCode::ConfigError, "unknown scene key '" + key + "'");
  }

  auto apply_car_key = [](CarSpec& car, const std::string& field, const std::string& value, const std::string& key) {
    if (field == "length_m") car.length_m = to_double(key, value);
    else if (field == "width_m") car.width_m = to_double(key, value);
    else if (field == "height_m") car.height_m = to_double(key, value);
    else if (field == "speed_mps") car.speed_mps = to_double(key, value);
    else if (field == "speed_kmh") car.speed_mps = to_double(key, value) / 3.6;
    else if (field == "lane") car.lane = static_cast<int>(to_double(key, value));
    else if (field == "spawn_s") car.spawn_time_s = to_double(key, value);
    else if (field == "direction") car.heading = to_heading(key, value);
    else return false;
    return true;
  };

  for (const auto& [n, fields] : car_groups) {
    CarSpec car;
    for (const auto& [field, value] : fields) {
      const std::string key = "car." + std::to_string(n) + "." + field;
      if (!apply_car_key(car, field, value, key)) throw Error(ErrorCode::ConfigError, "unknown scene key '" + key + "'");
    }
    spec.cars.push_back(car);
  }

  // Flows expand into evenly spaced cars; length jitter is drawn from the
  // scene seed so expansion is reproducible.
  std::mt19937_64 rng(spec.seed ^ 0x9e3779b97f4a7c15ULL);
  for (const auto& [n, fields] : flow_groups) {
    CarSpec proto;
    double interval = 5.0, start = 0.0, jitter = 0.0;
    long count = -1;
    for (const auto& [field, value] : fields) {
      const std::string key = "flow." + std::to_string(n) + "." + field;
      if (apply_car_key(proto, field, value, key)) continue;
      if (field == "interval_s") interval = to_double(key, value);
      else if (field == "start_s") start = to_double(key, value);
      else if (field == "count") count = static_cast<long>(to_double(key, value));
      else if (field == "length_jitter_m") jitter = to_double(key, value);
      else throw Error(ErrorCode::ConfigError, "unknown scene key '" + key + "'");
    }
    if (!(interval > 0)) throw Error(ErrorCode::ConfigError, "flow interval must be positive");
    std::uniform_real_distribution<double> jitter_dist(-jitter, jitter);
    for (long i = 0; count < 0 || i < count; ++i) {
      const double spawn = start + static_cast<double>(i) * interval;
      if (spawn >= spec.duration_s) break;
      CarSpec car = proto;
      car.spawn_time_s = spawn;
      if (jitter > 0) car.length_m += jitter_dist(rng);
      spec.cars.push_back(car);
    }
  }
  spec.validate();
  return spec;
}

SceneSpec read_scene(const fs::path& path) { return parse_scene(read_key_values(path)); }

SceneCamera::SceneCamera(const SceneSpec& spec)
    : k_(CameraIntrinsics::from_fov(spec.width, spec.height, spec.fov_deg)) {
  const double p = spec.camera_pitch_deg * std::numbers::pi / 180.0;
  center_ = {spec.camera_lateral_m, 0.0, spec.camera_height_m};
  right_ = {1.0, 0.0, 0.0};
  down_ = {0.0, -std::sin(p), -std::cos(p)};
  forward_ = {0.0, std::cos(p), -std::sin(p)};
}

Vec3 SceneCamera::to_camera(const Vec3& world) const {
  const Vec3 d = world - center_;
  return {right_.dot(d), down_.dot(d), forward_.dot(d)};
}

Point2 SceneCamera::project(const Vec3& world) const {
  const Vec3 c = to_camera(world);
  return {k_.u_0 + k_.f * k_.s_x * c.x / c.z, k_.v_0 + k_.f * k_.s_y * c.y / c.z};
}

std::optional<Vec3> SceneCamera::ground_hit(double u, double v) const {
  const double xc = (u - k_.u_0) / (k_.f * k_.s_x);
  const double yc = (v - k_.v_0) / (k_.f * k_.s_y);
  const Vec3 dir = right_ * xc + down_ * yc + forward_;
  if (dir.z >= -1e-12) return std::nullopt;
  const double t = -center_.z / dir.z;
  return center_ + dir * t;
}

std::optional<CarPose> car_pose(const SceneSpec& spec, const CarSpec& car, double t) {
  if (t < car.spawn_time_s) return std::nullopt;
  const double travelled = car.speed_mps * (t - car.spawn_time_s);
  const double road_end = spec.road_start_m + spec.road_length_m;
  CarPose pose;
  pose.x_center = spec.lane_center(car.lane);
  if (car.heading == Heading::Away) {
    pose.y_min = spec.road_start_m + travelled;
  } else {
    pose.y_min = road_end - car.length_m - travelled;
  }
  pose.y_max = pose.y_min + car.length_m;
  if (pose.y_min < spec.road_start_m || pose.y_max > road_end) return std::nullopt;
  return pose;
}

namespace {

std::optional<Box> project_car(const SceneCamera& cam, const SceneSpec& spec, const CarSpec& car,
                               const CarPose& pose) {
  Box hull{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
           -std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (double x : {pose.x_center - car.width_m / 2, pose.x_center + car.width_m / 2}) {
    for (double y : {pose.y_min, pose.y_max}) {
      for (double z : {0.0, car.height_m}) {
        const Vec3 corner{x, y, z};
        if (cam.to_camera(corner).z < kNearPlane) return std::nullopt;
        const Point2 p = cam.project(corner);
        hull.x_min = std::min(hull.x_min, p.u);
        hull.y_min = std::min(hull.y_min, p.v);
        hull.x_max = std::max(hull.x_max, p.u);
        hull.y_max = std::max(hull.y_max, p.v);
      }
    }
  }
  const double full_area = (hull.x_max - hull.x_min) * (hull.y_max - hull.y_min);
  Box clipped{std::max(hull.x_min, 0.0), std::max(hull.y_min, 0.0), std::min(hull.x_max, double(spec.width)),
              std::min(hull.y_max, double(spec.height))};
  if (!clipped.valid() || !(full_area > 0)) return std::nullopt;
  const double visible = (clipped.x_max - clipped.x_min) * (clipped.y_max - clipped.y_min);
  if (visible < spec.min_visible_fraction * full_area) return std::nullopt;
  return clipped;
}

DepthField render_depth(const SceneSpec& spec, const SceneCamera& cam) {
  DepthField field;
  field.width = spec.width;
  field.height = spec.height;
  field.values.resize(static_cast<std::size_t>(spec.width) * spec.height);
  const Vec3 center{spec.camera_lateral_m, 0.0, spec.camera_height_m};
  for (int y = 0; y < spec.height; ++y) {
    for (int x = 0; x < spec.width; ++x) {
      double dist = spec.depth_max_m;
      if (auto hit = cam.ground_hit(x, y)) dist = std::min((*hit - center).norm(), spec.depth_max_m);
      field.at(x, y) = static_cast<float>(dist / spec.true_scale);
    }
  }
  return field;
}

}  // namespace

Scene generate(const SceneSpec& spec) {
  spec.validate();
  Scene scene;
  scene.spec = spec;
  const SceneCamera cam(spec);
  scene.trace.header = {spec.fps, spec.width, spec.height};
  scene.truth.true_scale = spec.true_scale;
  for (std::size_t i = 0; i < spec.cars.size(); ++i) {
    CarTruth t;
    t.car_id = static_cast<std::int64_t>(i);
    t.speed_kmh = spec.cars[i].speed_mps * 3.6;
    t.direction = spec.cars[i].heading == Heading::Away ? Direction::YDecreasing : Direction::YIncreasing;
    scene.truth.cars.push_back(t);
  }

  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> noise(0.0, spec.box_noise_px > 0 ? spec.box_noise_px : 1.0);
  const std::int64_t frames = spec.frame_count();
  for (std::int64_t f = 0; f < frames; ++f) {
    const double t = static_cast<double>(f) / spec.fps;
    for (std::size_t i = 0; i < spec.cars.size(); ++i) {
      const auto pose = car_pose(spec, spec.cars[i], t);
      if (!pose) continue;
      auto box = project_car(cam, spec, spec.cars[i], *pose);
      if (!box) continue;
      if (spec.box_noise_px > 0) {
        Box jittered{box->x_min + noise(rng), box->y_min + noise(rng), box->x_max + noise(rng),
                     box->y_max + noise(rng)};
        jittered.x_min = std::clamp(jittered.x_min, 0.0, double(spec.width));
        jittered.x_max = std::clamp(jittered.x_max, 0.0, double(spec.width));
        jittered.y_min = std::clamp(jittered.y_min, 0.0, double(spec.height));
        jittered.y_max = std::clamp(jittered.y_max, 0.0, double(spec.height));
        if (!jittered.valid()) continue;
        box = jittered;
      }
      scene.trace.detections.push_back({f, *box, "car", spec.confidence});
      auto& truth = scene.truth.cars[i];
      if (truth.first_frame < 0) truth.first_frame = f;
      truth.last_frame = f;
    }
  }
  scene.depth = render_depth(spec, cam);
  return scene;
}

Renderer::Renderer(const Scene& scene) {
  const auto& spec = scene.spec;
  const SceneCamera cam(spec);
  background_ = Frame::filled(spec.width, spec.height, 1, kDark);
  for (int y = 0; y < spec.height; ++y) {
    for (int x = 0; x < spec.width; ++x) {
      const auto hit = cam.ground_hit(x, y);
      if (!hit) continue;
      const auto cx = static_cast<long long>(std::floor(hit->x / spec.tile_m));
      const auto cy = static_cast<long long>(std::floor(hit->y / spec.tile_m));
      background_.at(x, y) = ((cx + cy) % 2 == 0) ? kBright : kDark;
    }
  }
  boxes_.resize(static_cast<std::size_t>(spec.frame_count()));
  for (const auto& d : scene.trace.detections) {
    if (d.frame_index >= 0 && d.frame_index < static_cast<std::int64_t>(boxes_.size()))
      boxes_[static_cast<std::size_t>(d.frame_index)].push_back(d.box);
  }
  fps_ = spec.fps;
}

Frame Renderer::render(std::int64_t frame_index) const {
  Frame f = background_;
  f.index = frame_index;
  f.timestamp_s = static_cast<double>(frame_index) / fps_;
  if (frame_index < 0 || frame_index >= static_cast<std::int64_t>(boxes_.size())) return f;
  for (const auto& b : boxes_[static_cast<std::size_t>(frame_index)]) {
    const int x0 = std::max(0, static_cast<int>(std::floor(b.x_min)));
    const int x1 = std::min(f.width, static_cast<int>(std::ceil(b.x_max)));
    const int y0 = std::max(0, static_cast<int>(std::floor(b.y_min)));
    const int y1 = std::min(f.height, static_cast<int>(std::ceil(b.y_max)));
    for (int y = y0; y < y1; ++y)
      for (int x = x0; x < x1; ++x) f.at(x, y) = kBright;
  }
  return f;
}

CompositeScene inject_view_switch(Scene a, Scene b, std::int64_t switch_frame) {
  if (a.spec.width != b.spec.width || a.spec.height != b.spec.height)
    throw Error(ErrorCode::InvalidParameter, "view-switch scenes must share image dimensions");
  CompositeScene out;
  out.switch_frame = switch_frame;
  out.trace.header = a.trace.header;
  for (const auto& d : a.trace.detections)
    if (d.frame_index < switch_frame) out.trace.detections.push_back(d);
  for (const auto& d : b.trace.detections)
    if (d.frame_index >= switch_frame && d.frame_index < a.spec.frame_count()) out.trace.detections.push_back(d);
  std::stable_sort(out.trace.detections.begin(), out.trace.detections.end(),
                   [](const Detection& x, const Detection& y) { return x.frame_index < y.frame_index; });

  // Ground truth: each view contributes the cars visible on its side of the
  // switch, with frame ranges truncated at the switch.
  out.truth.true_scale = a.truth.true_scale;
  std::int64_t next_id = 0;
  auto add_truth = [&](const std::vector<CarTruth>& cars, std::int64_t lo, std::int64_t hi) {
    for (auto c : cars) {
      if (c.first_frame < 0 || c.last_frame < lo || c.first_frame >= hi) continue;
      c.first_frame = std::max(c.first_frame, lo);
      c.last_frame = std::min(c.last_frame, hi - 1);
      c.car_id = next_id++;
      out.truth.cars.push_back(c);
    }
  };
  add_truth(a.truth.cars, 0, switch_frame);
  add_truth(b.truth.cars, switch_frame, a.spec.frame_count());

  out.renderer_a_ = std::make_shared<Renderer>(a);
  out.renderer_b_ = std::make_shared<Renderer>(b);
  out.a = std::move(a);
  out.b = std::move(b);
  return out;
}

Frame CompositeScene::render(std::int64_t frame_index) const {
  return frame_index < switch_frame ? renderer_a_->render(frame_index) : renderer_b_->render(frame_index);
}

void write_ground_truth(const GroundTruth& gt, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << "car_id,speed_kmh,direction,first_frame,last_frame\n";
  for (const auto& c : gt.cars) {
    out << c.car_id << ',' << format_number(c.speed_kmh) << ',' << to_string(c.direction) << ',' << c.first_frame
        << ',' << c.last_frame << '\n';
  }
}

GroundTruth read_ground_truth(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::SourceUnavailable, "cannot open " + path.string());
  GroundTruth gt;
  std::string line;
  std::getline(in, line);
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string id, speed, dir, first, last;
    if (!std::getline(ss, id, ',') || !std::getline(ss, speed, ',') || !std::getline(ss, dir, ',') ||
        !std::getline(ss, first, ',') || !std::getline(ss, last))
      throw Error(ErrorCode::UnsupportedFormat, path.string() + ":" + std::to_string(line_no) + ": malformed row");
    gt.cars.push_back({std::stoll(id), std::stod(speed), direction_from_string(dir), std::stoll(first),
                       std::stoll(last)});
  }
  return gt;
}

namespace {

void write_info(const SceneSpec& spec, const fs::path& path) {
  std::ofstream out(path);
  out << "true_scale=" << format_number(spec.true_scale) << '\n'
      << "fps=" << format_number(spec.fps) << '\n'
      << "width=" << spec.width << '\n'
      << "height=" << spec.height << '\n'
      << "fov_deg=" << format_number(spec.fov_deg) << '\n'
      << "frames=" << spec.frame_count() << '\n';
}

}  // namespace

void write_scene(const Scene& scene, const fs::path& dir, bool frames) {
  fs::create_directories(dir);
  write_trace(scene.trace, dir / "detections.trace");
  write_depth_field(scene.depth, dir / "depth.bin");
  write_ground_truth(scene.truth, dir / "ground_truth.csv");
  write_info(scene.spec, dir / "scene_info.txt");
  if (frames) {
    fs::create_directories(dir / "frames");
    const Renderer renderer(scene);
    for (std::int64_t f = 0; f < scene.spec.frame_count(); ++f)
      write_image(renderer.render(f), dir / "frames" / ("frame_" + padded(f) + ".png"));
  }
}

void write_composite(const CompositeScene& scene, const fs::path& dir, bool frames) {
  fs::create_directories(dir / "depth");
  write_trace(scene.trace, dir / "detections.trace");
  write_depth_field(scene.a.depth, dir / "depth" / "depth_000000.bin");
  if (scene.switch_frame < scene.frame_count())
    write_depth_field(scene.b.depth, dir / "depth" / ("depth_" + padded(scene.switch_frame) + ".bin"));
  write_ground_truth(scene.truth, dir / "ground_truth.csv");
  write_info(scene.a.spec, dir / "scene_info.txt");
  if (frames) {
    fs::create_directories(dir / "frames");
    for (std::int64_t f = 0; f < scene.frame_count(); ++f)
      write_image(scene.render(f), dir / "frames" / ("frame_" + padded(f) + ".png"));
  }
}

}  // namespace farsec::sim
