#include "farsec/depth.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <numbers>
#include <regex>
#include <sstream>

#include "farsec/error.hpp"

namespace farsec {

namespace fs = std::filesystem;

double Vec3::norm() const { return std::sqrt(x * x + y * y + z * z); }

CameraIntrinsics CameraIntrinsics::from_fov(int width, int height, double fov_deg) {
  if (width <= 0 || height <= 0) throw Error(ErrorCode::InvalidParameter, "image size must be positive");
  if (!(fov_deg > 0.0 && fov_deg < 180.0)) throw Error(ErrorCode::InvalidParameter, "fov must lie in (0, 180)");
  CameraIntrinsics k;
  k.f = (width / 2.0) / std::tan(fov_deg * std::numbers::pi / 360.0);
  k.u_0 = width / 2.0;
  k.v_0 = height / 2.0;
  return k;
}

void CameraIntrinsics::validate() const {
  if (!(f > 0.0) || !(s_x > 0.0) || !(s_y > 0.0))
    throw Error(ErrorCode::InvalidParameter, "intrinsics require f, s_x, s_y > 0");
}

Vec3 spherical_to_cartesian(double r, double theta, double phi) {
  return {r * std::sin(theta) * std::cos(phi), r * std::sin(theta) * std::sin(phi), r * std::cos(theta)};
}

Vec3 WorldPoint::to_cartesian() const { return spherical_to_cartesian(r, theta, phi); }

double DepthField::sample(double u, double v) const {
  if (width <= 0 || height <= 0 || !(u >= -0.5 && u <= width - 0.5 && v >= -0.5 && v <= height - 0.5))
    throw Error(ErrorCode::BadDepthSample, "point outside depth field");
  u = std::clamp(u, 0.0, static_cast<double>(width - 1));
  v = std::clamp(v, 0.0, static_cast<double>(height - 1));
  const int x0 = std::min(static_cast<int>(u), width - 1);
  const int y0 = std::min(static_cast<int>(v), height - 1);
  const int x1 = std::min(x0 + 1, width - 1);
  const int y1 = std::min(y0 + 1, height - 1);
  const double fx = u - x0;
  const double fy = v - y0;
  const double a = at(x0, y0), b = at(x1, y0), c = at(x0, y1), d = at(x1, y1);
  for (double s : {a, b, c, d}) {
    if (!std::isfinite(s) || !(s > 0.0)) throw Error(ErrorCode::BadDepthSample, "invalid depth sample");
  }
  return (a * (1 - fx) + b * fx) * (1 - fy) + (c * (1 - fx) + d * fx) * fy;
}

DepthField read_depth_field(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::SourceUnavailable, "cannot open depth file " + path.string());
  std::string header;
  std::getline(in, header);
  std::istringstream hs(header);
  std::string magic, version;
  hs >> magic >> version;
  if (magic != "#farsec-depth" || version != "v1")
    throw Error(ErrorCode::UnsupportedFormat, "not a farsec depth file: " + path.string());
  DepthField field;
  std::string kv;
  while (hs >> kv) {
    if (kv.rfind("width=", 0) == 0) field.width = std::stoi(kv.substr(6));
    else if (kv.rfind("height=", 0) == 0) field.height = std::stoi(kv.substr(7));
  }
  if (field.width <= 0 || field.height <= 0)
    throw Error(ErrorCode::UnsupportedFormat, "depth header lacks dimensions: " + path.string());
  field.values.resize(static_cast<std::size_t>(field.width) * field.height);
  in.read(reinterpret_cast<char*>(field.values.data()),
          static_cast<std::streamsize>(field.values.size() * sizeof(float)));
  if (in.gcount() != static_cast<std::streamsize>(field.values.size() * sizeof(float)))
    throw Error(ErrorCode::UnsupportedFormat, "truncated depth payload: " + path.string());
  if constexpr (std::endian::native == std::endian::big) {
    for (auto& value : field.values) {
      auto bits = std::bit_cast<std::uint32_t>(value);
      bits = __builtin_bswap32(bits);
      value = std::bit_cast<float>(bits);
    }
  }
  return field;
}

void write_depth_field(const DepthField& field, const fs::path& path) {
  if (field.values.size() != static_cast<std::size_t>(field.width) * field.height)
    throw Error(ErrorCode::InvalidParameter, "depth field size mismatch");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write depth file " + path.string());
  out << "#farsec-depth v1 width=" << field.width << " height=" << field.height << '\n';
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char*>(field.values.data()),
              static_cast<std::streamsize>(field.values.size() * sizeof(float)));
  } else {
    for (float value : field.values) {
      const auto bits = __builtin_bswap32(std::bit_cast<std::uint32_t>(value));
      out.write(reinterpret_cast<const char*>(&bits), sizeof(bits));
    }
  }
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

SphericalDirection pixel_to_camera_ray(double u, double v, const CameraIntrinsics& k) {
  const double x = (u - k.u_0) / (k.f * k.s_x);
  const double y = (v - k.v_0) / (k.f * k.s_y);
  const double n = std::sqrt(x * x + y * y + 1.0);
  return {std::acos(1.0 / n), std::atan2(y, x)};
}

WorldPoint lift_point(double u, double v, const DepthField& field, const CameraIntrinsics& k) {
  const double r = field.sample(u, v);
  const auto ray = pixel_to_camera_ray(u, v, k);
  // (theta + pi, phi + pi) brought back into theta in [0, pi], phi in (-pi, pi].
  return {r, std::numbers::pi - ray.theta, ray.phi == -std::numbers::pi ? std::numbers::pi : ray.phi};
}

double model_distance(Point2 p, const DepthField& field_p, Point2 q, const DepthField& field_q,
                      const CameraIntrinsics& k) {
  const Vec3 a = lift_point(p.u, p.v, field_p, k).to_cartesian();
  const Vec3 b = lift_point(q.u, q.v, field_q, k).to_cartesian();
  return (a - b).norm();
}

double model_distance(Point2 p, Point2 q, const DepthField& field, const CameraIntrinsics& k) {
  return model_distance(p, field, q, field, k);
}

namespace {

bool valid_sample(float v) { return std::isfinite(v) && v > 0.0f; }

float median_of(std::vector<float>& v) {
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  const float upper = v[mid];
  if (v.size() % 2 == 1) return upper;
  const float lower = *std::max_element(v.begin(), v.begin() + mid);
  return static_cast<float>((static_cast<double>(lower) + upper) / 2.0);
}

}  // namespace

bool repair_depth(DepthField& field) {
  std::vector<float> neighbours;
  neighbours.reserve(9);
  bool any_invalid = true;
  while (any_invalid) {
    any_invalid = false;
    bool progressed = false;
    DepthField next = field;
    for (int y = 0; y < field.height; ++y) {
      for (int x = 0; x < field.width; ++x) {
        if (valid_sample(field.at(x, y))) continue;
        neighbours.clear();
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            const int nx = x + dx, ny = y + dy;
            if (nx < 0 || ny < 0 || nx >= field.width || ny >= field.height) continue;
            if (valid_sample(field.at(nx, ny))) neighbours.push_back(field.at(nx, ny));
          }
        }
        if (neighbours.empty()) {
          any_invalid = true;
        } else {
          next.at(x, y) = median_of(neighbours);
          progressed = true;
        }
      }
    }
    field = std::move(next);
    if (any_invalid && !progressed) return false;
  }
  return true;
}

FileDepthBackend::FileDepthBackend(const fs::path& path) {
  std::error_code ec;
  if (!fs::exists(path, ec)) throw Error(ErrorCode::SourceUnavailable, "no depth source at " + path.string());
  if (!fs::is_directory(path, ec)) {
    files_[0] = path;
    return;
  }
  static const std::regex pattern(R"(.*?(\d+)\.bin$)");
  for (const auto& entry : fs::directory_iterator(path)) {
    std::smatch m;
    const std::string name = entry.path().filename().string();
    if (entry.is_regular_file() && std::regex_match(name, m, pattern)) files_[std::stoll(m[1].str())] = entry.path();
  }
  if (files_.empty()) throw Error(ErrorCode::SourceUnavailable, "no *_<n>.bin depth files in " + path.string());
}

DepthField FileDepthBackend::estimate(const Frame& frame) {
  auto it = files_.upper_bound(frame.index);
  if (it == files_.begin()) {
    it = files_.begin();
  } else {
    --it;
  }
  auto cached = cache_.find(it->first);
  if (cached == cache_.end()) cached = cache_.emplace(it->first, read_depth_field(it->second)).first;
  return cached->second;
}

DepthField median_fuse(std::span<const DepthField> maps) {
  if (maps.empty()) throw Error(ErrorCode::CalibrationFailed, "no depth maps to fuse");
  DepthField out;
  out.width = maps.front().width;
  out.height = maps.front().height;
  for (const auto& m : maps) {
    if (m.width != out.width || m.height != out.height)
      throw Error(ErrorCode::CalibrationFailed, "depth maps differ in size");
  }
  const std::size_t n = static_cast<std::size_t>(out.width) * out.height;
  out.values.resize(n);
  out.frames_averaged = static_cast<int>(maps.size());
  if (maps.size() == 1) {
    out.values = maps.front().values;
    return out;
  }
  std::vector<float> stack;
  stack.reserve(maps.size());
  for (std::size_t i = 0; i < n; ++i) {
    stack.clear();
    for (const auto& m : maps) {
      if (valid_sample(m.values[i])) stack.push_back(m.values[i]);
    }
    out.values[i] = stack.empty() ? 0.0f : median_of(stack);
  }
  return out;
}

DepthField calibrate_depth(std::span<const Frame> frames, DepthBackend& backend, std::int64_t epoch) {
  std::vector<DepthField> maps;
  maps.reserve(frames.size());
  std::string last_error = "no calibration frames";
  for (const auto& frame : frames) {
    try {
      DepthField map = backend.estimate(frame);
      if (frame.width > 0 && (map.width != frame.width || map.height != frame.height))
        throw Error(ErrorCode::FrameShapeMismatch,
                    "depth field " + std::to_string(map.width) + "x" + std::to_string(map.height) +
                        " does not match frame " + std::to_string(frame.width) + "x" + std::to_string(frame.height));
      maps.push_back(std::move(map));
    } catch (const Error& e) {
      last_error = e.what();
    }
  }
  if (maps.empty()) throw Error(ErrorCode::CalibrationFailed, last_error);
  DepthField fused = median_fuse(maps);
  if (!repair_depth(fused)) throw Error(ErrorCode::CalibrationFailed, "depth field has no valid samples");
  fused.epoch = epoch;
  return fused;
}

}  // namespace farsec
