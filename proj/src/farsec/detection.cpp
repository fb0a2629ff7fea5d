#include "farsec/detection.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "farsec/error.hpp"

namespace farsec {

namespace {

std::vector<std::string_view> split_spaces(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (pos < line.size()) {
    while (pos < line.size() && line[pos] == ' ') ++pos;
    if (pos >= line.size()) break;
    const std::size_t end = std::min(line.find(' ', pos), line.size());
    out.push_back(line.substr(pos, end - pos));
    pos = end;
  }
  return out;
}

template <typename T>
bool parse_value(std::string_view text, T& out) {
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, out);
  return ec == std::errc() && ptr == end;
}

[[noreturn]] void parse_error(std::size_t line_no, const std::string& what) {
  throw Error(ErrorCode::TraceParseError, "line " + std::to_string(line_no) + ": " + what);
}

TraceHeader parse_header(std::string_view line) {
  auto fields = split_spaces(line);
  if (fields.size() < 2 || fields[0] != "#farsec-trace" || fields[1] != "v1")
    parse_error(1, "expected '#farsec-trace v1' header");
  TraceHeader header;
  for (std::size_t i = 2; i < fields.size(); ++i) {
    const auto eq = fields[i].find('=');
    if (eq == std::string_view::npos) parse_error(1, "malformed header field");
    const auto key = fields[i].substr(0, eq);
    const auto value = fields[i].substr(eq + 1);
    bool ok = true;
    if (key == "fps") {
      double fps = 0.0;
      ok = parse_value(value, fps) && fps > 0.0;
      header.fps = fps;
    } else if (key == "width") {
      ok = parse_value(value, header.width) && header.width >= 0;
    } else if (key == "height") {
      ok = parse_value(value, header.height) && header.height >= 0;
    }
    if (!ok) parse_error(1, "bad header value for " + std::string(key));
  }
  return header;
}

}  // namespace

std::string format_number(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

DetectionTrace read_trace(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::SourceUnavailable, "cannot open trace " + path.string());
  DetectionTrace trace;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!have_header) {
      trace.header = parse_header(line);
      have_header = true;
      continue;
    }
    if (line.empty() || line[0] == '#') continue;
    auto f = split_spaces(line);
    if (f.size() != 7) parse_error(line_no, "expected 7 fields, got " + std::to_string(f.size()));
    Detection d;
    if (!parse_value(f[0], d.frame_index) || d.frame_index < 0) parse_error(line_no, "bad frame_index");
    if (!parse_value(f[1], d.box.x_min) || !parse_value(f[2], d.box.y_min) || !parse_value(f[3], d.box.x_max) ||
        !parse_value(f[4], d.box.y_max))
      parse_error(line_no, "bad box coordinate");
    if (!d.box.valid()) parse_error(line_no, "box requires x_min < x_max and y_min < y_max");
    d.class_label = std::string(f[5]);
    if (!parse_value(f[6], d.confidence) || d.confidence < 0.0 || d.confidence > 1.0)
      parse_error(line_no, "bad confidence");
    trace.detections.push_back(std::move(d));
  }
  if (!have_header) parse_error(1, "empty trace file");
  return trace;
}

void write_trace(const DetectionTrace& trace, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write trace " + path.string());
  out << "#farsec-trace v1";
  if (trace.header.fps) out << " fps=" << format_number(*trace.header.fps);
  out << " width=" << trace.header.width << " height=" << trace.header.height << '\n';
  for (const auto& d : trace.detections) {
    if (d.class_label.empty() || d.class_label.find(' ') != std::string::npos)
      throw Error(ErrorCode::InvalidParameter, "class label must be a single non-empty token");
    out << d.frame_index << ' ' << format_number(d.box.x_min) << ' ' << format_number(d.box.y_min) << ' '
        << format_number(d.box.x_max) << ' ' << format_number(d.box.y_max) << ' ' << d.class_label << ' '
        << format_number(d.confidence) << '\n';
  }
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

TraceDetector::TraceDetector(const DetectionTrace& trace, double min_confidence) : header_(trace.header) {
  for (const auto& d : trace.detections) {
    frame_count_ = std::max(frame_count_, d.frame_index + 1);
    if (d.confidence < min_confidence) continue;
    by_frame_[d.frame_index].push_back(d);
  }
}

std::vector<Detection> TraceDetector::detect(const Frame& frame) {
  auto it = by_frame_.find(frame.index);
  if (it == by_frame_.end()) return {};
  std::vector<Detection> out = it->second;
  const bool rescale = header_.width > 0 && header_.height > 0 && frame.width > 0 && frame.height > 0 &&
                       (header_.width != frame.width || header_.height != frame.height);
  const double sx = rescale ? static_cast<double>(frame.width) / header_.width : 1.0;
  const double sy = rescale ? static_cast<double>(frame.height) / header_.height : 1.0;
  for (auto& d : out) {
    d.box.x_min *= sx;
    d.box.x_max *= sx;
    d.box.y_min *= sy;
    d.box.y_max *= sy;
    if (frame.width > 0 && frame.height > 0) {
      d.box.x_min = std::clamp(d.box.x_min, 0.0, static_cast<double>(frame.width));
      d.box.x_max = std::clamp(d.box.x_max, 0.0, static_cast<double>(frame.width));
      d.box.y_min = std::clamp(d.box.y_min, 0.0, static_cast<double>(frame.height));
      d.box.y_max = std::clamp(d.box.y_max, 0.0, static_cast<double>(frame.height));
    }
  }
  std::erase_if(out, [](const Detection& d) { return !d.box.valid(); });
  return out;
}

std::vector<Detection> filter_cars(const std::vector<Detection>& detections) {
  std::vector<Detection> out;
  std::copy_if(detections.begin(), detections.end(), std::back_inserter(out),
               [](const Detection& d) { return d.class_label == "car"; });
  return out;
}

}  // namespace farsec
