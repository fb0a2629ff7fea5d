#pragma once

#include <cstddef>
#include <deque>
#include <optional>
#include <vector>

#include "farsec/frame.hpp"

namespace farsec {

struct MoveDetectorConfig {
  std::size_t window = 100;
  double offset = 0.15;
  int pixel_delta = 10;
  std::size_t warmup = 10;
};

struct MoveVerdict {
  double changed_fraction = 0.0;
  double rolling_mean = 0.0;
  bool triggered = false;
};

/// Fraction of pixels whose luma differs by more than `pixel_delta`.
/// Throws FrameShapeMismatch if the frames differ in size.
double pixel_change_fraction(const Frame& prev, const Frame& cur, int pixel_delta);

/// Spike detector over the fraction of changed pixels between consecutive
/// frames. A spike triggers when it exceeds the rolling mean of the last
/// `window` fractions plus `offset`, once at least `warmup` fractions are
/// known. The spike itself never enters the history; a trigger empties it.
class CameraMoveDetector {
 public:
  explicit CameraMoveDetector(MoveDetectorConfig config = {});

  MoveVerdict observe(const Frame& frame);

  std::size_t history_size() const { return history_.size(); }
  double rolling_mean() const;
  const MoveDetectorConfig& config() const { return config_; }

 private:
  MoveDetectorConfig config_;
  std::deque<double> history_;
  std::optional<std::vector<std::uint8_t>> last_luma_;
  int last_width_ = 0;
  int last_height_ = 0;
};

}  // namespace farsec
