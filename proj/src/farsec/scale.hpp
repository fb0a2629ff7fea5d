#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "farsec/depth.hpp"
#include "farsec/tracking.hpp"

namespace farsec {

/// Two box/centroid-line intersections assumed to lie one car length apart.
struct EvidencePair {
  Point2 p_a;
  Point2 p_b;
  double d_model = 0.0;
  double l_true = 6.0;
  std::int64_t track_id = 0;
  std::int64_t frame_index = 0;
};

struct ScaleCalibration {
  double s_hat = 0.0;  // meters per model unit
  std::size_t pair_count = 0;
  double residual_rms = 0.0;
  std::int64_t epoch = 0;
};

struct ScaleOptions {
  std::size_t min_pairs = 20;
  /// Drop pairs whose model length lies outside [median / 3, 3 * median].
  bool reject_outliers = true;
};

/// argmin_s ||l - s d||_2 = d.l / d.d.
double closed_form_scale(std::span<const double> d_model, std::span<const double> l_true);

/// Throws InsufficientEvidence (fewer than min_pairs) or InvalidPair
/// (non-positive model distance).
ScaleCalibration estimate_scale(std::span<const EvidencePair> pairs, const ScaleOptions& options = {});

/// Evidence from every observation of `track` whose box meets the fitted
/// centroid line and whose intersections lift to valid depth. Tracks shorter
/// than `min_track_frames` or without a centroid line yield nothing.
std::vector<EvidencePair> collect_pairs(const Track& track, const DepthField& depth, const CameraIntrinsics& k,
                                        double car_length_m = 6.0, std::size_t min_track_frames = 5);

}  // namespace farsec
