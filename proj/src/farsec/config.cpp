#include "farsec/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <variant>

#include "farsec/detection.hpp"
#include "farsec/error.hpp"

namespace farsec {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

using Member = std::variant<std::string PipelineConfig::*, double PipelineConfig::*, int PipelineConfig::*,
                            bool PipelineConfig::*, std::uint64_t PipelineConfig::*, OutputFormat PipelineConfig::*>;

struct Field {
  const char* key;
  Member member;
};

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      {"source", &PipelineConfig::source},
      {"detector", &PipelineConfig::detector},
      {"depth", &PipelineConfig::depth},
      {"out", &PipelineConfig::out},
      {"format", &PipelineConfig::format},
      {"dump_tracks", &PipelineConfig::dump_tracks},
      {"ingest.max_fps", &PipelineConfig::ingest_max_fps},
      {"ingest.max_width", &PipelineConfig::ingest_max_width},
      {"ingest.max_height", &PipelineConfig::ingest_max_height},
      {"ingest.fps", &PipelineConfig::ingest_fps},
      {"ingest.blur", &PipelineConfig::ingest_blur},
      {"ingest.noise", &PipelineConfig::ingest_noise},
      {"ingest.seed", &PipelineConfig::ingest_seed},
      {"ingest.channel_capacity", &PipelineConfig::ingest_channel_capacity},
      {"move.enabled", &PipelineConfig::move_enabled},
      {"move.window", &PipelineConfig::move_window},
      {"move.offset", &PipelineConfig::move_offset},
      {"move.pixel_delta", &PipelineConfig::move_pixel_delta},
      {"move.warmup", &PipelineConfig::move_warmup},
      {"detect.min_confidence", &PipelineConfig::detect_min_confidence},
      {"track.threshold_px", &PipelineConfig::track_threshold_px},
      {"track.max_misses", &PipelineConfig::track_max_misses},
      {"track.min_frames", &PipelineConfig::track_min_frames},
      {"track.dir_deadband", &PipelineConfig::track_dir_deadband},
      {"track.lane_width_m", &PipelineConfig::track_lane_width_m},
      {"track.expected_max_kmh", &PipelineConfig::track_expected_max_kmh},
      {"fps.samples", &PipelineConfig::fps_samples},
      {"depth.calib_frames", &PipelineConfig::depth_calib_frames},
      {"depth.stride", &PipelineConfig::depth_stride},
      {"camera.fov_deg", &PipelineConfig::camera_fov_deg},
      {"scale.min_pairs", &PipelineConfig::scale_min_pairs},
      {"scale.car_length_m", &PipelineConfig::scale_car_length_m},
      {"speed.window_s", &PipelineConfig::speed_window_s},
      {"speed.report_interval", &PipelineConfig::speed_report_interval},
  };
  return table;
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const char* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end)
    throw Error(ErrorCode::ConfigError, "type mismatch for key '" + key + "': '" + value + "'");
  return out;
}

}  // namespace

KeyValues parse_key_values(const std::string& text, const std::string& origin) {
  KeyValues out;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorCode::ConfigError, origin + ":" + std::to_string(line_no) + ": expected key=value");
    out.emplace_back(trim(std::string_view(t).substr(0, eq)), trim(std::string_view(t).substr(eq + 1)));
  }
  return out;
}

KeyValues read_key_values(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ConfigError, "cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_key_values(ss.str(), path.string());
}

void PipelineConfig::set(const std::string& key, const std::string& value) {
  for (const auto& f : fields()) {
    if (key != f.key) continue;
    std::visit(
        [&](auto member) {
          using T = std::remove_reference_t<decltype(this->*member)>;
          if constexpr (std::is_same_v<T, std::string>) {
            this->*member = value;
          } else if constexpr (std::is_same_v<T, bool>) {
            if (value == "true" || value == "1") this->*member = true;
            else if (value == "false" || value == "0") this->*member = false;
            else throw Error(ErrorCode::ConfigError, "type mismatch for key '" + key + "': '" + value + "'");
          } else if constexpr (std::is_same_v<T, OutputFormat>) {
            if (value == "jsonl" || value == "json") this->*member = OutputFormat::Jsonl;
            else if (value == "csv") this->*member = OutputFormat::Csv;
            else throw Error(ErrorCode::ConfigError, "format must be jsonl or csv, got '" + value + "'");
          } else {
            this->*member = parse_number<T>(key, value);
          }
        },
        f.member);
    return;
  }
  throw Error(ErrorCode::ConfigError, "unknown key '" + key + "'");
}

void PipelineConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw Error(ErrorCode::ConfigError, what);
  };
  require(ingest_max_fps > 0, "ingest.max_fps must be > 0");
  require(ingest_max_width > 0 && ingest_max_height > 0, "ingest.max_width/max_height must be > 0");
  require(ingest_fps >= 0, "ingest.fps must be >= 0");
  require(ingest_blur >= 0, "ingest.blur must be >= 0");
  require(ingest_noise >= 0 && ingest_noise <= 1, "ingest.noise must lie in [0, 1]");
  require(ingest_channel_capacity > 0, "ingest.channel_capacity must be > 0");
  require(move_window > 0, "move.window must be > 0");
  require(move_offset >= 0, "move.offset must be >= 0");
  require(move_pixel_delta >= 0, "move.pixel_delta must be >= 0");
  require(move_warmup >= 0, "move.warmup must be >= 0");
  require(detect_min_confidence >= 0 && detect_min_confidence <= 1, "detect.min_confidence must lie in [0, 1]");
  require(track_threshold_px > 0, "track.threshold_px must be > 0");
  require(track_max_misses >= 0, "track.max_misses must be >= 0");
  require(track_min_frames >= 2, "track.min_frames must be >= 2");
  require(track_dir_deadband >= 0, "track.dir_deadband must be >= 0");
  require(track_lane_width_m > 0, "track.lane_width_m must be > 0");
  require(track_expected_max_kmh >= 0, "track.expected_max_kmh must be >= 0");
  require(fps_samples >= 2, "fps.samples must be >= 2");
  require(depth_calib_frames >= 1, "depth.calib_frames must be >= 1");
  require(depth_stride >= 1, "depth.stride must be >= 1");
  require(camera_fov_deg > 0 && camera_fov_deg < 180, "camera.fov_deg must lie in (0, 180)");
  require(scale_min_pairs >= 1, "scale.min_pairs must be >= 1");
  require(scale_car_length_m > 0, "scale.car_length_m must be > 0");
  require(speed_window_s > 0, "speed.window_s must be > 0");
  require(speed_report_interval > 0, "speed.report_interval must be > 0");
}

KeyValues PipelineConfig::entries() const {
  KeyValues out;
  for (const auto& f : fields()) {
    std::string value = std::visit(
        [&](auto member) -> std::string {
          using T = std::remove_cvref_t<decltype(this->*member)>;
          const auto& v = this->*member;
          if constexpr (std::is_same_v<T, std::string>) return v;
          else if constexpr (std::is_same_v<T, bool>) return v ? "true" : "false";
          else if constexpr (std::is_same_v<T, OutputFormat>) return v == OutputFormat::Csv ? "csv" : "jsonl";
          else if constexpr (std::is_same_v<T, double>) return format_number(v);
          else return std::to_string(v);
        },
        f.member);
    out.emplace_back(f.key, std::move(value));
  }
  return out;
}

PipelineConfig load_config(const std::optional<std::filesystem::path>& path, const KeyValues& overrides) {
  PipelineConfig config;
  if (path) {
    for (const auto& [k, v] : read_key_values(*path)) config.set(k, v);
  }
  for (const auto& [k, v] : overrides) config.set(k, v);
  config.validate();
  return config;
}

}  // namespace farsec
