#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace farsec {

/// A timestamped 8-bit raster. Frames produced in trace-only mode carry no
/// pixels (channels == 0); stages that need pixels skip them.
struct Frame {
  std::int64_t index = 0;
  double timestamp_s = 0.0;
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<std::uint8_t> pixels;  // row-major, interleaved channels
  std::string source_id;

  bool has_pixels() const { return channels > 0 && !pixels.empty(); }
  std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }

  std::uint8_t at(int x, int y, int c = 0) const {
    return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  std::uint8_t& at(int x, int y, int c = 0) {
    return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }

  static Frame filled(int width, int height, int channels, std::uint8_t value);
};

struct SourceConfig {
  std::string uri;
  double max_fps = 30.0;
  int max_width = 1920;
  int max_height = 1080;
  std::optional<double> declared_fps;
};

/// Ordered, single-consumer stream of frames.
class FrameSource {
 public:
  virtual ~FrameSource() = default;
  virtual std::optional<Frame> next() = 0;
  /// Frame rate taken from container metadata, when the source has any.
  virtual std::optional<double> declared_fps() const { return std::nullopt; }
};

/// Replays an in-memory frame list; used by the simulator and tests.
class MemorySource : public FrameSource {
 public:
  explicit MemorySource(std::vector<Frame> frames, std::optional<double> fps = std::nullopt)
      : frames_(std::move(frames)), fps_(fps) {}
  std::optional<Frame> next() override;
  std::optional<double> declared_fps() const override { return fps_; }

 private:
  std::vector<Frame> frames_;
  std::size_t pos_ = 0;
  std::optional<double> fps_;
};

/// Pixel-less frames 0..count-1 spaced 1/fps apart (trace-only replay).
class ClockSource : public FrameSource {
 public:
  ClockSource(std::int64_t count, double fps, int width, int height, std::string source_id);
  std::optional<Frame> next() override;
  std::optional<double> declared_fps() const override { return fps_; }

 private:
  std::int64_t count_;
  std::int64_t pos_ = 0;
  double fps_;
  int width_;
  int height_;
  std::string id_;
};

/// Enforces the FPS and resolution caps on an upstream source and reindexes
/// the surviving frames gaplessly.
class NormalizingSource : public FrameSource {
 public:
  NormalizingSource(std::unique_ptr<FrameSource> inner, double max_fps, int max_width, int max_height);
  std::optional<Frame> next() override;
  std::optional<double> declared_fps() const override;

 private:
  std::unique_ptr<FrameSource> inner_;
  double max_fps_;
  int max_width_;
  int max_height_;
  std::optional<double> last_emitted_;
  std::int64_t next_index_ = 0;
};

/// Opens a directory of numbered images or a video file and applies the caps
/// from `config`. Throws SourceUnavailable / UnsupportedFormat.
std::unique_ptr<FrameSource> open_source(const SourceConfig& config);

/// Lists `*_<digits>.<ext>` image files in numeric order.
std::vector<std::filesystem::path> list_image_sequence(const std::filesystem::path& dir);

Frame read_image(const std::filesystem::path& path);
void write_image(const Frame& frame, const std::filesystem::path& path);

/// Area-averaging downscale by min(max_w/width, max_h/height); frames that
/// already fit are returned unchanged.
Frame downsample(const Frame& frame, int max_w, int max_h);

/// k x k normalized box filter with edge replication. For even k the window
/// spans offsets [-k/2, k/2 - 1].
Frame apply_blur(const Frame& frame, int k = 10);

/// Sets exactly round(fraction * width * height) distinct pixel positions to
/// `value` on all channels. Deterministic for a given seed.
Frame apply_salt_noise(const Frame& frame, double fraction, std::uint8_t value, std::uint64_t seed);

/// Per-pixel luma (channel mean, rounded).
std::vector<std::uint8_t> luma(const Frame& frame);

}  // namespace farsec
