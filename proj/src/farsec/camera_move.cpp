#include "farsec/camera_move.hpp"

#include <cstdlib>
#include <numeric>

#include "farsec/error.hpp"

namespace farsec {

namespace {

double changed_fraction(const std::vector<std::uint8_t>& a, const std::vector<std::uint8_t>& b, int pixel_delta) {
  if (a.empty()) return 0.0;
  std::size_t changed = 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    changed += std::abs(static_cast<int>(a[i]) - static_cast<int>(b[i])) > pixel_delta;
  return static_cast<double>(changed) / static_cast<double>(a.size());
}

}  // namespace

double pixel_change_fraction(const Frame& prev, const Frame& cur, int pixel_delta) {
  if (prev.width != cur.width || prev.height != cur.height)
    throw Error(ErrorCode::FrameShapeMismatch, "frames differ in size");
  return changed_fraction(luma(prev), luma(cur), pixel_delta);
}

CameraMoveDetector::CameraMoveDetector(MoveDetectorConfig config) : config_(config) {
  if (config_.window == 0) throw Error(ErrorCode::InvalidParameter, "move.window must be positive");
  if (config_.offset < 0.0) throw Error(ErrorCode::InvalidParameter, "move.offset must be non-negative");
}

double CameraMoveDetector::rolling_mean() const {
  if (history_.empty()) return 0.0;
  return std::accumulate(history_.begin(), history_.end(), 0.0) / static_cast<double>(history_.size());
}

MoveVerdict CameraMoveDetector::observe(const Frame& frame) {
  MoveVerdict verdict;
  if (!frame.has_pixels()) return verdict;

  auto current = luma(frame);
  if (!last_luma_) {
    last_luma_ = std::move(current);
    last_width_ = frame.width;
    last_height_ = frame.height;
    return verdict;
  }

  // A resolution change is a view change in every sense that matters here.
  verdict.changed_fraction = (frame.width != last_width_ || frame.height != last_height_)
                                 ? 1.0
                                 : changed_fraction(*last_luma_, current, config_.pixel_delta);
  verdict.rolling_mean = rolling_mean();
  verdict.triggered = history_.size() >= config_.warmup &&
                      verdict.changed_fraction > verdict.rolling_mean + config_.offset;

  if (verdict.triggered) {
    history_.clear();
  } else {
    history_.push_back(verdict.changed_fraction);
    if (history_.size() > config_.window) history_.pop_front();
  }
  last_luma_ = std::move(current);
  last_width_ = frame.width;
  last_height_ = frame.height;
  return verdict;
}

}  // namespace farsec
