#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "farsec/detection.hpp"
#include "farsec/frame.hpp"

namespace farsec {

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
  double norm() const;
};

struct CameraIntrinsics {
  double f = 1.0;
  double s_x = 1.0;
  double s_y = 1.0;
  double u_0 = 0.0;
  double v_0 = 0.0;

  /// Zero skew, centred principal point, square pixels, f from the
  /// horizontal field of view.
  static CameraIntrinsics from_fov(int width, int height, double fov_deg);
  void validate() const;
};

/// ISO spherical angles: theta is the polar angle from +z, phi the azimuth
/// from +x towards +y. The camera frame has x right, y down, z forward, so the
/// optical axis has theta = 0.
struct SphericalDirection {
  double theta = 0.0;
  double phi = 0.0;
};

struct WorldPoint {
  double r = 0.0;
  double theta = 0.0;
  double phi = 0.0;

  Vec3 to_cartesian() const;
};

Vec3 spherical_to_cartesian(double r, double theta, double phi);

/// Per-pixel relative depth (radial distance along the pixel ray, in model
/// units). Pixel (i, j) has its centre at image coordinates (i, j).
struct DepthField {
  int width = 0;
  int height = 0;
  std::vector<float> values;
  int frames_averaged = 1;
  std::int64_t epoch = 0;

  float at(int x, int y) const { return values[static_cast<std::size_t>(y) * width + x]; }
  float& at(int x, int y) { return values[static_cast<std::size_t>(y) * width + x]; }

  /// Bilinear interpolation between pixel centres. Throws BadDepthSample
  /// outside the field or next to an invalid sample.
  double sample(double u, double v) const;
};

DepthField read_depth_field(const std::filesystem::path& path);
void write_depth_field(const DepthField& field, const std::filesystem::path& path);

SphericalDirection pixel_to_camera_ray(double u, double v, const CameraIntrinsics& k);

/// World point for pixel (u, v): radius from the depth field, angles from the
/// pixel ray shifted by pi. In canonical ISO ranges the shift maps
/// (theta, phi) to (pi - theta, phi), i.e. it mirrors the optical axis; it is
/// an isometry so distances are unaffected.
WorldPoint lift_point(double u, double v, const DepthField& field, const CameraIntrinsics& k);

double model_distance(Point2 p, Point2 q, const DepthField& field, const CameraIntrinsics& k);
double model_distance(Point2 p, const DepthField& field_p, Point2 q, const DepthField& field_q,
                      const CameraIntrinsics& k);

/// Replaces non-finite and non-positive samples by the median of valid 3x3
/// neighbours, repeating until every sample is valid. Returns false if the
/// field holds no valid sample at all.
bool repair_depth(DepthField& field);

class DepthBackend {
 public:
  virtual ~DepthBackend() = default;
  virtual std::string name() const = 0;
  virtual DepthField estimate(const Frame& frame) = 0;
};

/// Serves depth fields from disk. A single file is used for every frame; for a
/// directory of `*_<n>.bin` files, frame i gets the file with the largest n <= i.
class FileDepthBackend : public DepthBackend {
 public:
  explicit FileDepthBackend(const std::filesystem::path& path);
  std::string name() const override { return "file"; }
  DepthField estimate(const Frame& frame) override;

 private:
  std::map<std::int64_t, std::filesystem::path> files_;
  std::map<std::int64_t, DepthField> cache_;
};

/// Per-pixel median over the backend's maps for `frames`, repaired and tagged
/// with `epoch`. Frames whose backend call fails are skipped; throws
/// CalibrationFailed if none succeed.
DepthField calibrate_depth(std::span<const Frame> frames, DepthBackend& backend, std::int64_t epoch = 0);

/// Per-pixel median of already computed maps (same dimensions).
DepthField median_fuse(std::span<const DepthField> maps);

}  // namespace farsec
