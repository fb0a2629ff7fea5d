#include "farsec/frame.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>
#include <regex>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/videoio.hpp>

#include "farsec/error.hpp"

namespace farsec {

namespace fs = std::filesystem;

Frame Frame::filled(int width, int height, int channels, std::uint8_t value) {
  Frame f;
  f.width = width;
  f.height = height;
  f.channels = channels;
  f.pixels.assign(static_cast<std::size_t>(width) * height * channels, value);
  return f;
}

std::optional<Frame> MemorySource::next() {
  if (pos_ >= frames_.size()) return std::nullopt;
  return std::move(frames_[pos_++]);
}

ClockSource::ClockSource(std::int64_t count, double fps, int width, int height, std::string source_id)
    : count_(count), fps_(fps), width_(width), height_(height), id_(std::move(source_id)) {
  if (!(fps > 0.0)) throw Error(ErrorCode::InvalidParameter, "clock source needs fps > 0");
}

std::optional<Frame> ClockSource::next() {
  if (pos_ >= count_) return std::nullopt;
  Frame f;
  f.index = pos_;
  f.timestamp_s = static_cast<double>(pos_) / fps_;
  f.width = width_;
  f.height = height_;
  f.source_id = id_;
  ++pos_;
  return f;
}

NormalizingSource::NormalizingSource(std::unique_ptr<FrameSource> inner, double max_fps, int max_width,
                                     int max_height)
    : inner_(std::move(inner)), max_fps_(max_fps), max_width_(max_width), max_height_(max_height) {
  if (!(max_fps > 0.0)) throw Error(ErrorCode::InvalidParameter, "max_fps must be positive");
  if (max_width <= 0 || max_height <= 0) throw Error(ErrorCode::InvalidParameter, "max dimensions must be positive");
}

std::optional<double> NormalizingSource::declared_fps() const {
  auto fps = inner_->declared_fps();
  if (fps && *fps > max_fps_) return max_fps_;
  return fps;
}

std::optional<Frame> NormalizingSource::next() {
  constexpr double kEps = 1e-9;
  const double min_gap = 1.0 / max_fps_;
  while (auto frame = inner_->next()) {
    if (last_emitted_ && frame->timestamp_s - *last_emitted_ < min_gap - kEps) continue;
    last_emitted_ = frame->timestamp_s;
    Frame out = frame->has_pixels() ? downsample(*frame, max_width_, max_height_) : std::move(*frame);
    if (!out.has_pixels() && (out.width > max_width_ || out.height > max_height_)) {
      const double f = std::min(static_cast<double>(max_width_) / out.width,
                                static_cast<double>(max_height_) / out.height);
      out.width = static_cast<int>(std::lround(out.width * f));
      out.height = static_cast<int>(std::lround(out.height * f));
    }
    out.index = next_index_++;
    return out;
  }
  return std::nullopt;
}

namespace {

bool is_stream_uri(const std::string& uri) { return uri.find("://") != std::string::npos; }

Frame from_mat(const cv::Mat& input) {
  if (input.depth() != CV_8U) throw Error(ErrorCode::UnsupportedFormat, "only 8-bit images are supported");
  cv::Mat mat = input;
  if (mat.channels() == 4) {
    std::vector<cv::Mat> planes;
    cv::split(mat, planes);
    planes.pop_back();
    cv::merge(planes, mat);
  }
  if (mat.channels() != 1 && mat.channels() != 3)
    throw Error(ErrorCode::UnsupportedFormat, "unsupported channel count");
  if (!mat.isContinuous()) mat = mat.clone();
  Frame f;
  f.width = mat.cols;
  f.height = mat.rows;
  f.channels = mat.channels();
  f.pixels.assign(mat.data, mat.data + mat.total() * mat.channels());
  return f;
}

class ImageSequenceSource : public FrameSource {
 public:
  ImageSequenceSource(std::vector<fs::path> files, std::optional<double> fps, std::string id)
      : files_(std::move(files)), fps_(fps), id_(std::move(id)) {}

  std::optional<Frame> next() override {
    if (pos_ >= files_.size()) return std::nullopt;
    Frame f = read_image(files_[pos_]);
    f.index = static_cast<std::int64_t>(pos_);
    f.timestamp_s = static_cast<double>(pos_) / fps_.value_or(30.0);
    f.source_id = id_;
    ++pos_;
    return f;
  }
  std::optional<double> declared_fps() const override { return fps_; }

 private:
  std::vector<fs::path> files_;
  std::size_t pos_ = 0;
  std::optional<double> fps_;
  std::string id_;
};

class VideoSource : public FrameSource {
 public:
  VideoSource(cv::VideoCapture capture, std::optional<double> fps, bool live, std::string id)
      : capture_(std::move(capture)), fps_(fps), live_(live), id_(std::move(id)),
        start_(std::chrono::steady_clock::now()) {}

  std::optional<Frame> next() override {
    cv::Mat mat;
    if (!capture_.read(mat) || mat.empty()) return std::nullopt;
    Frame f = from_mat(mat);
    f.index = index_;
    if (live_) {
      f.timestamp_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    } else if (fps_) {
      f.timestamp_s = static_cast<double>(index_) / *fps_;
    } else {
      f.timestamp_s = capture_.get(cv::CAP_PROP_POS_MSEC) / 1000.0;
    }
    f.source_id = id_;
    ++index_;
    return f;
  }
  std::optional<double> declared_fps() const override { return fps_; }

 private:
  cv::VideoCapture capture_;
  std::optional<double> fps_;
  bool live_;
  std::string id_;
  std::int64_t index_ = 0;
  std::chrono::steady_clock::time_point start_;
};

}  // namespace

std::vector<fs::path> list_image_sequence(const fs::path& dir) {
  static const std::regex pattern(R"(.*?(\d+)\.(png|jpg|jpeg|pgm|ppm|bmp|tif|tiff)$)", std::regex::icase);
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw Error(ErrorCode::SourceUnavailable, "not a directory: " + dir.string());
  std::vector<std::pair<long long, fs::path>> numbered;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    std::smatch m;
    const std::string name = entry.path().filename().string();
    if (std::regex_match(name, m, pattern)) numbered.emplace_back(std::stoll(m[1].str()), entry.path());
  }
  std::sort(numbered.begin(), numbered.end());
  std::vector<fs::path> out;
  out.reserve(numbered.size());
  for (auto& [_, p] : numbered) out.push_back(std::move(p));
  return out;
}

Frame read_image(const fs::path& path) {
  cv::Mat mat = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
  if (mat.empty()) throw Error(ErrorCode::UnsupportedFormat, "cannot decode image " + path.string());
  return from_mat(mat);
}

void write_image(const Frame& frame, const fs::path& path) {
  if (!frame.has_pixels()) throw Error(ErrorCode::InvalidParameter, "frame has no pixels");
  const int type = frame.channels == 1 ? CV_8UC1 : CV_8UC3;
  cv::Mat mat(frame.height, frame.width, type, const_cast<std::uint8_t*>(frame.pixels.data()));
  if (!cv::imwrite(path.string(), mat)) throw Error(ErrorCode::IoError, "cannot write image " + path.string());
}

std::unique_ptr<FrameSource> open_source(const SourceConfig& config) {
  std::unique_ptr<FrameSource> raw;
  const fs::path path(config.uri);
  if (is_stream_uri(config.uri)) {
    cv::VideoCapture cap(config.uri);
    if (!cap.isOpened()) throw Error(ErrorCode::SourceUnavailable, "cannot open stream " + config.uri);
    std::optional<double> fps = config.declared_fps;
    if (!fps && cap.get(cv::CAP_PROP_FPS) > 0) fps = cap.get(cv::CAP_PROP_FPS);
    raw = std::make_unique<VideoSource>(std::move(cap), fps, true, config.uri);
  } else {
    std::error_code ec;
    if (!fs::exists(path, ec)) throw Error(ErrorCode::SourceUnavailable, "no such source " + config.uri);
    if (fs::is_directory(path, ec)) {
      auto files = list_image_sequence(path);
      if (files.empty()) throw Error(ErrorCode::UnsupportedFormat, "no numbered images in " + config.uri);
      raw = std::make_unique<ImageSequenceSource>(std::move(files), config.declared_fps, config.uri);
    } else {
      cv::VideoCapture cap(config.uri);
      if (!cap.isOpened()) throw Error(ErrorCode::UnsupportedFormat, "unsupported container " + config.uri);
      std::optional<double> fps = config.declared_fps;
      if (!fps && cap.get(cv::CAP_PROP_FPS) > 0) fps = cap.get(cv::CAP_PROP_FPS);
      raw = std::make_unique<VideoSource>(std::move(cap), fps, false, config.uri);
    }
  }
  return std::make_unique<NormalizingSource>(std::move(raw), config.max_fps, config.max_width, config.max_height);
}

namespace {

// Overlap weights of output cell i over the source axis, for scale src/dst.
struct AxisTap {
  int first;
  std::vector<double> weights;
};

std::vector<AxisTap> area_taps(int src, int dst) {
  std::vector<AxisTap> taps(dst);
  const double scale = static_cast<double>(src) / dst;
  for (int i = 0; i < dst; ++i) {
    const double lo = i * scale;
    const double hi = std::min<double>((i + 1) * scale, src);
    const int first = static_cast<int>(std::floor(lo));
    const int last = std::min(src - 1, static_cast<int>(std::ceil(hi)) - 1);
    taps[i].first = first;
    for (int s = first; s <= last; ++s) {
      const double w = std::min<double>(s + 1, hi) - std::max<double>(s, lo);
      taps[i].weights.push_back(std::max(0.0, w) / (hi - lo));
    }
  }
  return taps;
}

}  // namespace

Frame downsample(const Frame& frame, int max_w, int max_h) {
  if (frame.width <= max_w && frame.height <= max_h) return frame;
  const double factor = std::min(static_cast<double>(max_w) / frame.width,
                                 static_cast<double>(max_h) / frame.height);
  const int out_w = std::clamp(static_cast<int>(std::lround(frame.width * factor)), 1, max_w);
  const int out_h = std::clamp(static_cast<int>(std::lround(frame.height * factor)), 1, max_h);
  const int c = frame.channels;

  const auto xt = area_taps(frame.width, out_w);
  const auto yt = area_taps(frame.height, out_h);

  std::vector<double> rows(static_cast<std::size_t>(frame.height) * out_w * c);
  for (int y = 0; y < frame.height; ++y) {
    for (int x = 0; x < out_w; ++x) {
      for (int ch = 0; ch < c; ++ch) {
        double acc = 0.0;
        for (std::size_t k = 0; k < xt[x].weights.size(); ++k)
          acc += xt[x].weights[k] * frame.at(xt[x].first + static_cast<int>(k), y, ch);
        rows[(static_cast<std::size_t>(y) * out_w + x) * c + ch] = acc;
      }
    }
  }

  Frame out = frame;
  out.width = out_w;
  out.height = out_h;
  out.pixels.assign(static_cast<std::size_t>(out_w) * out_h * c, 0);
  for (int y = 0; y < out_h; ++y) {
    for (int x = 0; x < out_w; ++x) {
      for (int ch = 0; ch < c; ++ch) {
        double acc = 0.0;
        for (std::size_t k = 0; k < yt[y].weights.size(); ++k)
          acc += yt[y].weights[k] * rows[((yt[y].first + k) * out_w + x) * c + ch];
        out.at(x, y, ch) = static_cast<std::uint8_t>(std::clamp(std::lround(acc), 0L, 255L));
      }
    }
  }
  return out;
}

Frame apply_blur(const Frame& frame, int k) {
  if (k < 1 || k > std::min(frame.width, frame.height))
    throw Error(ErrorCode::InvalidParameter, "blur kernel out of range: " + std::to_string(k));
  if (k == 1) return frame;
  const int w = frame.width;
  const int h = frame.height;
  const int c = frame.channels;
  const int lo = -(k / 2);
  const int hi = lo + k - 1;

  // Separable running sums over edge-replicated coordinates.
  std::vector<std::int64_t> horiz(static_cast<std::size_t>(w) * h * c);
  for (int y = 0; y < h; ++y) {
    for (int ch = 0; ch < c; ++ch) {
      std::int64_t sum = 0;
      for (int o = lo; o <= hi; ++o) sum += frame.at(std::clamp(o, 0, w - 1), y, ch);
      for (int x = 0; x < w; ++x) {
        horiz[(static_cast<std::size_t>(y) * w + x) * c + ch] = sum;
        sum += frame.at(std::clamp(x + hi + 1, 0, w - 1), y, ch);
        sum -= frame.at(std::clamp(x + lo, 0, w - 1), y, ch);
      }
    }
  }
  Frame out = frame;
  const std::int64_t area = static_cast<std::int64_t>(k) * k;
  auto hval = [&](int x, int y, int ch) { return horiz[(static_cast<std::size_t>(y) * w + x) * c + ch]; };
  for (int x = 0; x < w; ++x) {
    for (int ch = 0; ch < c; ++ch) {
      std::int64_t sum = 0;
      for (int o = lo; o <= hi; ++o) sum += hval(x, std::clamp(o, 0, h - 1), ch);
      for (int y = 0; y < h; ++y) {
        out.at(x, y, ch) = static_cast<std::uint8_t>((2 * sum + area) / (2 * area));
        sum += hval(x, std::clamp(y + hi + 1, 0, h - 1), ch);
        sum -= hval(x, std::clamp(y + lo, 0, h - 1), ch);
      }
    }
  }
  return out;
}

Frame apply_salt_noise(const Frame& frame, double fraction, std::uint8_t value, std::uint64_t seed) {
  if (!(fraction >= 0.0 && fraction <= 1.0))
    throw Error(ErrorCode::InvalidParameter, "noise fraction must lie in [0, 1]");
  const std::size_t n = frame.pixel_count();
  const auto count = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
  Frame out = frame;
  if (count == 0) return out;

  // Partial Fisher-Yates: the first `count` slots are a uniform sample
  // without replacement.
  std::vector<std::uint32_t> positions(n);
  std::iota(positions.begin(), positions.end(), 0u);
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < count; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, n - 1);
    std::swap(positions[i], positions[pick(rng)]);
  }
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t base = static_cast<std::size_t>(positions[i]) * frame.channels;
    for (int ch = 0; ch < frame.channels; ++ch) out.pixels[base + ch] = value;
  }
  return out;
}

std::vector<std::uint8_t> luma(const Frame& frame) {
  std::vector<std::uint8_t> out(frame.pixel_count());
  if (frame.channels == 1) {
    std::copy(frame.pixels.begin(), frame.pixels.end(), out.begin());
    return out;
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    int sum = 0;
    for (int ch = 0; ch < frame.channels; ++ch) sum += frame.pixels[i * frame.channels + ch];
    out[i] = static_cast<std::uint8_t>((2 * sum + frame.channels) / (2 * frame.channels));
  }
  return out;
}

}  // namespace farsec
