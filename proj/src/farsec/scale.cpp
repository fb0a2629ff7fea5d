#include "farsec/scale.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "farsec/error.hpp"

namespace farsec {

double closed_form_scale(std::span<const double> d_model, std::span<const double> l_true) {
  if (d_model.size() != l_true.size()) throw Error(ErrorCode::InvalidParameter, "length mismatch");
  if (d_model.empty()) throw Error(ErrorCode::InsufficientEvidence, "no evidence pairs");
  double dl = 0.0, dd = 0.0;
  for (std::size_t i = 0; i < d_model.size(); ++i) {
    dl += d_model[i] * l_true[i];
    dd += d_model[i] * d_model[i];
  }
  if (!(dd > 0.0)) throw Error(ErrorCode::InvalidPair, "all model distances are zero");
  return dl / dd;
}

ScaleCalibration estimate_scale(std::span<const EvidencePair> pairs, const ScaleOptions& options) {
  if (pairs.size() < std::max<std::size_t>(options.min_pairs, 1))
    throw Error(ErrorCode::InsufficientEvidence, "have " + std::to_string(pairs.size()) + " pairs, need " +
                                                     std::to_string(std::max<std::size_t>(options.min_pairs, 1)));
  for (const auto& p : pairs) {
    if (!(p.d_model > 0.0) || !std::isfinite(p.d_model)) throw Error(ErrorCode::InvalidPair, "d_model must be > 0");
    if (!(p.l_true > 0.0)) throw Error(ErrorCode::InvalidPair, "l_true must be > 0");
  }

  double lo = 0.0, hi = std::numeric_limits<double>::infinity();
  if (options.reject_outliers) {
    std::vector<double> d;
    d.reserve(pairs.size());
    for (const auto& p : pairs) d.push_back(p.d_model);
    std::nth_element(d.begin(), d.begin() + d.size() / 2, d.end());
    double median = d[d.size() / 2];
    if (d.size() % 2 == 0) median = (median + *std::max_element(d.begin(), d.begin() + d.size() / 2)) / 2.0;
    lo = median / 3.0;
    hi = median * 3.0;
  }

  std::vector<double> dm, lt;
  for (const auto& p : pairs) {
    if (p.d_model < lo || p.d_model > hi) continue;
    dm.push_back(p.d_model);
    lt.push_back(p.l_true);
  }
  ScaleCalibration cal;
  cal.s_hat = closed_form_scale(dm, lt);
  cal.pair_count = dm.size();
  double sq = 0.0;
  for (std::size_t i = 0; i < dm.size(); ++i) {
    const double r = lt[i] - cal.s_hat * dm[i];
    sq += r * r;
  }
  cal.residual_rms = std::sqrt(sq / static_cast<double>(dm.size()));
  return cal;
}

std::vector<EvidencePair> collect_pairs(const Track& track, const DepthField& depth, const CameraIntrinsics& k,
                                        double car_length_m, std::size_t min_track_frames) {
  std::vector<EvidencePair> out;
  if (track.observations.size() < std::max<std::size_t>(min_track_frames, 2)) return out;
  CentroidLine line;
  try {
    line = fit_centroid_line(track);
  } catch (const Error&) {
    return out;
  }
  for (const auto& obs : track.observations) {
    try {
      const auto [a, b] = box_line_intersections(obs.box, line);
      const double d = model_distance(a, b, depth, k);
      if (!(d > 0.0)) continue;
      out.push_back({a, b, d, car_length_m, track.id, obs.frame_index});
    } catch (const Error&) {
      // Intersection missed or depth invalid at this observation.
    }
  }
  return out;
}

}  // namespace farsec
